//! One-dimensional maximization of concave functions.
//!
//! The search brackets the maximum by doubling steps away from a starting
//! point (stopping at a hard cap for unbounded domains), then shrinks the
//! bracket by golden-section steps. Concavity makes every local maximum
//! global, so a single bracket suffices; plateaus are handled because ties
//! never discard the maximizing side.

use crate::scalar::Real;

/// Closed interval, possibly with infinite ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Domain<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Domain { lo, hi }
    }

    pub fn real_line() -> Self {
        Domain::new(T::neg_infinity(), T::infinity())
    }

    pub fn nonnegative() -> Self {
        Domain::new(T::zero(), T::infinity())
    }

    pub fn contains(&self, t: T) -> bool {
        t >= self.lo && t <= self.hi
    }

    pub fn clamp(&self, t: T) -> T {
        if t < self.lo {
            self.lo
        } else if t > self.hi {
            self.hi
        } else {
            t
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum<T> {
    pub arg: T,
    pub value: T,
    /// The maximizer sits on the cap of an unbounded side: the function was
    /// still nondecreasing there.
    pub hit_cap: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions<T> {
    /// First trial step away from the start point.
    pub step: T,
    /// Absolute limit on `|t|` for unbounded sides.
    pub cap: T,
    /// Relative argument tolerance: stop when width <= arg_tol * (1 + |t|).
    pub arg_tol: T,
}

impl<T: Real> SearchOptions<T> {
    pub fn new(step: T, cap: T, arg_tol: T) -> Self {
        SearchOptions { step, cap, arg_tol }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes the concave `f` over `domain`, starting the bracket search at
/// `start` (clamped into the domain).
pub fn maximize<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    domain: Domain<T>,
    start: T,
    opts: SearchOptions<T>,
) -> Maximum<T> {
    let lo = if domain.lo < -opts.cap { -opts.cap } else { domain.lo };
    let hi = if domain.hi > opts.cap { opts.cap } else { domain.hi };
    let lo_capped = domain.lo < lo;
    let hi_capped = domain.hi > hi;

    let mut best = Best::new();
    let mut eval = |t: T, best: &mut Best<T>| {
        let v = f(t);
        best.offer(t, v);
        v
    };

    if hi <= lo {
        let v = eval(lo, &mut best);
        return Maximum { arg: lo, value: v, hit_cap: false };
    }

    let (a, b) = if !domain.lo.is_inf() && !domain.hi.is_inf() && !lo_capped && !hi_capped {
        (lo, hi)
    } else {
        bracket(&mut |t| eval(t, &mut best), lo, hi, start, opts.step)
    };

    golden(&mut |t| eval(t, &mut best), a, b, opts.arg_tol);

    let (arg, value) = best.get();
    let near = |x: T, edge: T| (x - edge).abs() <= opts.arg_tol * (T::one() + edge.abs()) * T::lit(10.0);
    let hit_cap = (hi_capped && near(arg, hi)) || (lo_capped && near(arg, lo));
    Maximum { arg, value, hit_cap }
}

struct Best<T> {
    arg: Option<T>,
    value: T,
}

impl<T: Real> Best<T> {
    fn new() -> Self {
        Best { arg: None, value: T::neg_infinity() }
    }

    fn offer(&mut self, t: T, v: T) {
        if self.arg.is_none() || v > self.value {
            self.arg = Some(t);
            self.value = v;
        }
    }

    fn get(&self) -> (T, T) {
        (self.arg.unwrap_or_else(T::zero), self.value)
    }
}

/// Expands outward from `start` until the function turns down on each
/// examined side; returns a bracket `[a, b]` containing a maximizer.
fn bracket<T: Real, F: FnMut(T) -> T>(f: &mut F, lo: T, hi: T, start: T, step: T) -> (T, T) {
    let c = if start < lo { lo } else if start > hi { hi } else { start };
    let fc = f(c);
    let two = T::lit(2.0);

    if c < hi {
        let r = if c + step > hi { hi } else { c + step };
        let fr = f(r);
        if fr > fc {
            let (mut prev, mut cur, mut fcur) = (c, r, fr);
            let mut width = r - c;
            while cur < hi {
                width *= two;
                let next = if c + width > hi { hi } else { c + width };
                let fnext = f(next);
                if fnext <= fcur {
                    return (prev, next);
                }
                prev = cur;
                cur = next;
                fcur = fnext;
            }
            return (prev, hi);
        }
        if c > lo {
            let l = if c - step < lo { lo } else { c - step };
            let fl = f(l);
            if fl > fc {
                return march_left(f, c, l, fl, lo);
            }
            return (l, r);
        }
        return (c, r);
    }
    // c == hi: only the left side is available.
    let l = if c - step < lo { lo } else { c - step };
    let fl = f(l);
    if fl > fc {
        return march_left(f, c, l, fl, lo);
    }
    (l, c)
}

fn march_left<T: Real, F: FnMut(T) -> T>(f: &mut F, c: T, l: T, fl: T, lo: T) -> (T, T) {
    let two = T::lit(2.0);
    let (mut prev, mut cur, mut fcur) = (c, l, fl);
    let mut width = c - l;
    while cur > lo {
        width *= two;
        let next = if c - width < lo { lo } else { c - width };
        let fnext = f(next);
        if fnext <= fcur {
            return (next, prev);
        }
        prev = cur;
        cur = next;
        fcur = fnext;
    }
    (lo, prev)
}

fn golden<T: Real, F: FnMut(T) -> T>(f: &mut F, mut a: T, mut b: T, arg_tol: T) {
    let r = T::lit(INV_PHI);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    f(a);
    f(b);
    for _ in 0..400 {
        let mid = (a + b) / T::lit(2.0);
        if b - a <= arg_tol * (T::one() + mid.abs()) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    f((a + b) / T::lit(2.0));
}
