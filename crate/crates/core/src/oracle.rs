//! Brute-force oracles used to audit the decision procedures at small
//! dimension. They refute or corroborate; they never prove a universal
//! statement, so a clean run is reported as "true so far".

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::{self, NumrangeProblem, QuadForm};
use crate::qp1eqc::gaussian;
use crate::scalar::Real;
use crate::symlin;
use crate::tol::Tolerances;

/// Base margin of a violation of (E1); see [`oracle_e1`].
pub const E1_MARGIN: f64 = 1e-8;

/// Points on `{h = 0}`: random Gaussian anchors and directions, exact
/// roots of the scalar quadratic along each line. May return fewer than
/// `count` points.
pub fn sample_constraint<T: Real>(h: &QuadForm<T>, count: usize, seed: u64, tols: &Tolerances<T>) -> Vec<DVector<T>> {
    let n = h.dim();
    let ftol = tols.feas * (T::one() + h.constant.abs() + h.lin.norm() + h.quad.norm_inf());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let max_lines = 20 * count + 100;
    for _ in 0..max_lines {
        if out.len() >= count {
            break;
        }
        let x0 = gaussian::<T>(n, &mut rng);
        let u = gaussian::<T>(n, &mut rng);
        for t in h.line_roots(&x0, &u) {
            let x = &x0 + &u * t;
            if h.value(&x).abs() <= ftol && out.len() < count {
                out.push(x);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum E1Oracle<T: Real> {
    /// No violation among `checked` samples; inconclusive.
    TrueSoFar { checked: usize },
    FalseWithWitness(DVector<T>),
}

/// Tries to refute `h(x) = 0 => f(x) >= 0` by sampling the constraint set.
/// A sample counts when `f(x)` is below `-E1_MARGIN (1 + |f|)` by more than
/// the root resolution of the sample.
pub fn oracle_e1<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, samples: usize, seed: u64, tols: &Tolerances<T>) -> E1Oracle<T> {
    let pts = sample_constraint(h, samples, seed, tols);
    let base = T::lit(E1_MARGIN) * (T::one() + f.data_norm());
    for x in &pts {
        // Near a double root of the line quadratic the sample is only
        // accurate to a few multiples of sqrt(eps), which moves f by the
        // gradient times that much.
        let resolution = T::lit(10.0) * T::machine_eps().sqrt() * f.gradient(x).norm() * (T::one() + x.norm());
        if f.value(x) < -(base + resolution) {
            return E1Oracle::FalseWithWitness(x.clone());
        }
    }
    E1Oracle::TrueSoFar { checked: pts.len() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum E2Oracle<T> {
    FoundMu(T),
    NoneOnGrid,
}

/// `lo, lo + step, ..., hi` (inclusive up to rounding).
pub fn mu_grid<T: Real>(lo: T, hi: T, step: T) -> Vec<T> {
    let n = ((hi - lo) / step).floor().as_f64().max(0.0) as usize;
    (0..=n).map(|i| lo + step * T::lit(i as f64)).collect()
}

/// Eigenvalue check of `lift(f) + mu lift(h)` on every grid point; returns
/// the valid `mu` of smallest magnitude.
pub fn oracle_e2<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, grid: &[T], tols: &Tolerances<T>) -> E2Oracle<T> {
    let (m0, m1) = (f.lift(), h.lift());
    let mut order: Vec<T> = grid.to_vec();
    order.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap_or(std::cmp::Ordering::Equal));
    for mu in order {
        let tol = tols.sign_tol(m0.norm_inf() + mu.abs() * m1.norm_inf());
        if symlin::lambda_min(&m0.add_scaled(&m1, mu)) >= -tol {
            return E2Oracle::FoundMu(mu);
        }
    }
    E2Oracle::NoneOnGrid
}

/// `(f(x), h_1(x), ..., h_p(x))`.
pub fn image<T: Real>(p: &NumrangeProblem<T>, x: &DVector<T>) -> DVector<T> {
    let mut v = Vec::with_capacity(p.affines.len() + 1);
    v.push(p.f.value(x));
    for (b, d) in &p.affines {
        v.push(T::lit(2.0) * b.dot(x) + *d);
    }
    DVector::from_vec(v)
}

/// Whether `m` lies in the joint numerical range, within `tol`: the affine
/// coordinates fix an affine set of `x`, on which the range of `f` is
/// computed exactly.
pub fn in_numerical_range<T: Real>(p: &NumrangeProblem<T>, m: &DVector<T>, tol: T, tols: &Tolerances<T>) -> bool {
    let k = p.affines.len();
    let pm = p.p_matrix() * T::lit(2.0);
    let rhs = DVector::from_fn(k, |i, _| m[i + 1] - p.affines[i].1);
    let svd = pm.clone().svd(true, true);
    let cut = tols.rank_cut(svd.singular_values.max()).max(tols.eig);
    let Ok(x0) = svd.solve(&rhs, cut) else {
        return false;
    };
    if (&pm * &x0 - &rhs).amax() > tol {
        return false;
    }
    let v = symlin::null_basis(&pm, tols.eig);
    let Ok(q) = model::restrict_to_affine(&p.f, &x0, &v) else {
        return false;
    };
    model::value_range(&q, tols).contains_approx(m[0], tol)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MidpointOracle<T: Real> {
    /// No violating pair among `checked` pairs; inconclusive.
    ConvexSoFar { checked: usize },
    /// `(F(x) + F(y)) / 2` is not in the range.
    Violation { x: DVector<T>, y: DVector<T>, midpoint: DVector<T> },
}

/// Samples pairs of points at several scales and tests whether the midpoint
/// of their images lies in the joint numerical range.
pub fn midpoint_oracle<T: Real>(p: &NumrangeProblem<T>, pairs: usize, seed: u64, tols: &Tolerances<T>) -> MidpointOracle<T> {
    let n = p.f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scales = [0.1, 1.0, 10.0].map(T::lit);
    for i in 0..pairs {
        let s = scales[i % scales.len()];
        let x = gaussian::<T>(n, &mut rng) * s;
        let y = gaussian::<T>(n, &mut rng) * s;
        let m = (image(p, &x) + image(p, &y)) / T::lit(2.0);
        let tol = T::lit(1e-6) * (T::one() + m.amax());
        if !in_numerical_range(p, &m, tol, tols) {
            return MidpointOracle::Violation { x, y, midpoint: m };
        }
    }
    MidpointOracle::ConvexSoFar { checked: pairs }
}

/// Dense feasible sampling for `inf { f : l <= h <= u }`: returns the best
/// value found, or `None` when no feasible sample turned up.
///
/// Half of the budget draws global lines at several scales; the other half
/// refines around the incumbent with a geometrically shrinking radius.
pub fn gtrs_sampling_min<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, l: T, u: T, samples: usize, seed: u64) -> Option<(T, DVector<T>)> {
    let n = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(T, DVector<T>)> = None;
    let offer = |best: &mut Option<(T, DVector<T>)>, x: DVector<T>| {
        let hx = h.value(&x);
        if hx >= l && hx <= u {
            let v = f.value(&x);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                *best = Some((v, x));
            }
        }
    };
    // Points on the two boundaries along a line carry most of the mass of
    // nonconvex minimizers; the anchor covers the interior.
    let probe = |best: &mut Option<(T, DVector<T>)>, x0: DVector<T>, d: DVector<T>| {
        for level in [l, u] {
            for t in h.shifted(level).line_roots(&x0, &d) {
                offer(best, &x0 + &d * t);
            }
        }
        offer(best, x0);
    };
    let scales = [0.3, 1.0, 3.0, 10.0, 30.0, 100.0].map(T::lit);
    let global = samples.div_ceil(2);
    for i in 0..global {
        let x0 = gaussian::<T>(n, &mut rng) * scales[i % scales.len()];
        let d = gaussian::<T>(n, &mut rng);
        probe(&mut best, x0, d);
    }
    let local = samples - global;
    if let Some(start) = best.as_ref().map(|(_, x)| x.clone()) {
        let mut radius = T::one() + start.norm();
        let decay = T::lit(1e-8).powf(T::one() / T::from_usize(local.max(1)).unwrap_or(T::one()));
        for _ in 0..local {
            let centre = best.as_ref().map_or_else(|| start.clone(), |(_, x)| x.clone());
            let x0 = centre + gaussian::<T>(n, &mut rng) * radius;
            let d = gaussian::<T>(n, &mut rng);
            probe(&mut best, x0, d);
            radius *= decay;
        }
    }
    best
}
