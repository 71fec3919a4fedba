//! Interval-constrained problems `inf { f(x) : l <= h(x) <= u }` and the
//! interval S-lemma.
//!
//! When `f` is convex with a stationary point inside the band the minimum is
//! interior. Otherwise the infimum is the smaller of the two boundary
//! problems `h = l` and `h = u`, each handled by the equality solver.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::concave::Domain;
use crate::error::{Error, Result};
use crate::model::{self, GtrsProblem, QuadForm, Unconstrained};
use crate::qp1eqc::{self, SolveOutcome, Status};
use crate::scalar::Real;
use crate::slemma::{self, Branch};
use crate::symlin::{self, SymMatrix};
use crate::tol::Tolerances;

/// Where the reported value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Source {
    Interior,
    LowerBoundary,
    UpperBoundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtrsOutcome<T: Real> {
    pub status: Status,
    pub value: T,
    pub x_star: Option<DVector<T>>,
    pub mu_star: Option<T>,
    pub source: Source,
    /// Boundary solves that ran; absent when infeasible or skipped.
    pub lower: Option<SolveOutcome<T>>,
    pub upper: Option<SolveOutcome<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSLemmaVerdict<T: Real> {
    pub equivalence_holds: bool,
    pub i1_true: bool,
    pub i2_true: bool,
    /// Multiplier of the certificate `f + mu_- (h - u) + mu_+ (l - h)`.
    pub mu: Option<T>,
    /// A `nu >= 0` making the exception matrix PSD, when the exception fires.
    pub exception_nu: Option<T>,
    /// A point with `l <= h(x) <= u` and `f(x) < 0`.
    pub counterexample: Option<DVector<T>>,
    /// The equality-lemma branch when `l = u`.
    pub branch: Option<Branch>,
    pub notes: Vec<String>,
}

fn band_tol<T: Real>(h: &QuadForm<T>, tols: &Tolerances<T>) -> T {
    tols.feas * (T::one() + h.constant.abs() + h.lin.norm() + h.quad.norm_inf())
}

/// Whether some `x` has `l < h(x) < u`.
pub fn strict_feasibility<T: Real>(p: &GtrsProblem<T>, tols: &Tolerances<T>) -> bool {
    if !(p.l < p.u) {
        return false;
    }
    let r = model::value_range(&p.constraint, tols);
    if r.lo == r.hi {
        return r.lo > p.l && r.lo < p.u;
    }
    r.lo.max(p.l) < r.hi.min(p.u)
}

/// Whether some `x` has `l <= h(x) <= u`, within the feasibility tolerance.
pub fn is_feasible<T: Real>(p: &GtrsProblem<T>, tols: &Tolerances<T>) -> bool {
    let r = model::value_range(&p.constraint, tols);
    let tol = band_tol(&p.constraint, tols);
    let lo = r.lo.max(p.l);
    let hi = r.hi.min(p.u);
    if lo < hi {
        return true;
    }
    // The overlap has collapsed to (at most) a point: it must be attained.
    r.contains_approx(lo, tol) && lo <= p.u + tol && lo >= p.l - tol
}

/// A point of the stationary set `x0 + span(V)` with `h` inside the band.
fn interior_point<T: Real>(
    p: &GtrsProblem<T>,
    x0: &DVector<T>,
    v: &DMatrix<T>,
    tols: &Tolerances<T>,
) -> Result<Option<DVector<T>>> {
    let q = model::restrict_to_affine(&p.constraint, x0, v)?;
    let tol = band_tol(&p.constraint, tols);
    let h0 = q.constant;
    if h0 >= p.l - tol && h0 <= p.u + tol {
        return Ok(Some(x0.clone()));
    }
    let level = if h0 < p.l { p.l } else { p.u };
    let r = model::value_range(&q, tols);
    if !r.contains_approx(level, tol) {
        return Ok(None);
    }
    Ok(qp1eqc::feasible_point(&q.shifted(level), tols).map(|w| x0 + v * w))
}

fn boundary_solve<T: Real>(p: &GtrsProblem<T>, level: T, tols: &Tolerances<T>, seed: u64) -> Result<Option<SolveOutcome<T>>> {
    match qp1eqc::solve(&p.boundary(level), tols, seed) {
        Ok(out) => Ok(Some(out)),
        Err(Error::InfeasibleConstraint) => Ok(None),
        Err(e) => Err(e),
    }
}

/// True when `a` should replace `b` as the reported boundary outcome.
fn better<T: Real>(a: &SolveOutcome<T>, b: &SolveOutcome<T>) -> bool {
    let gap = T::lit(1e-9) * (T::one() + a.value.abs().min(b.value.abs()));
    match (a.status, b.status) {
        (_, Status::Unbounded) => false,
        (Status::Unbounded, _) => true,
        (Status::Unattained, Status::Attained) => a.value < b.value - gap,
        (Status::Attained, Status::Unattained) => a.value <= b.value + gap,
        _ => a.value < b.value,
    }
}

/// Global solve of the interval problem.
pub fn solve_gtrs<T: Real>(p: &GtrsProblem<T>, tols: &Tolerances<T>, seed: u64) -> Result<GtrsOutcome<T>> {
    if !is_feasible(p, tols) {
        return Err(Error::InfeasibleProblem);
    }
    let f = &p.objective;
    let s = symlin::spectrum(&f.quad, tols.eig);
    if s.is_psd() {
        if let Unconstrained::Attained { x, value } = model::minimize_unconstrained(f, tols) {
            let null = symlin::null_basis(f.quad.as_matrix(), tols.eig);
            if let Some(x) = interior_point(p, &x, &null, tols)? {
                return Ok(GtrsOutcome {
                    status: Status::Attained,
                    value,
                    x_star: Some(x),
                    mu_star: Some(T::zero()),
                    source: Source::Interior,
                    lower: None,
                    upper: None,
                });
            }
        }
    }

    let lower = boundary_solve(p, p.l, tols, seed)?;
    let upper = if p.u == p.l { None } else { boundary_solve(p, p.u, tols, seed)? };
    let (chosen, source) = match (&lower, &upper) {
        (Some(lo), Some(up)) if better(up, lo) => (up, Source::UpperBoundary),
        (Some(lo), _) => (lo, Source::LowerBoundary),
        (None, Some(up)) => (up, Source::UpperBoundary),
        (None, None) => return Err(Error::InfeasibleProblem),
    };
    Ok(GtrsOutcome {
        status: chosen.status,
        value: chosen.value,
        x_star: chosen.x_star.clone(),
        mu_star: chosen.mu_star,
        source,
        lower: lower.clone(),
        upper: upper.clone(),
    })
}

/// `f + mu_- (h - u) + mu_+ (l - h)` with `mu_+ = max(mu, 0)` and
/// `mu_- = -min(mu, 0)`.
pub fn interval_combination<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, l: T, u: T, mu: T) -> QuadForm<T> {
    if mu >= T::zero() {
        f.add_scaled(&h.shifted(l), -mu)
    } else {
        f.add_scaled(&h.shifted(u), -mu)
    }
}

fn combination_tol<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, l: T, u: T, mu: T, tols: &Tolerances<T>) -> T {
    let scale = f.lift().norm_inf() + mu.abs() * (h.lift().norm_inf() + l.abs().max(u.abs()));
    tols.sign_tol(scale)
}

/// Checks an interval certificate by an eigenvalue test of the lifted
/// combination.
pub fn interval_certificate_is_valid<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, l: T, u: T, mu: T, tols: &Tolerances<T>) -> bool {
    let m = interval_combination(f, h, l, u, mu).lift();
    symlin::lambda_min(&m) >= -combination_tol(f, h, l, u, mu, tols)
}

/// Searches a multiplier on each half line; the combination is affine in
/// `mu` on either side of zero.
fn interval_certificate_search<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, l: T, u: T, tols: &Tolerances<T>) -> Option<T> {
    let m0 = f.lift();
    let sides = [(h.shifted(l).scale(-T::one()).lift(), T::one()), (h.shifted(u).lift(), -T::one())];
    let mut best: Option<(T, T)> = None;
    for (m1, sign) in sides {
        let r = symlin::max_lambda_min_affine(&m0, &m1, Domain::nonnegative(), tols);
        let (t, value) = if r.hit_cap {
            match symlin::retreat_from_cap(&m0, &m1, &r, T::zero(), tols) {
                Some(t) => (t, symlin::lambda_min(&m0.add_scaled(&m1, t))),
                None => continue,
            }
        } else {
            (r.arg, r.value)
        };
        if best.is_none_or(|(_, v)| value > v) {
            best = Some((sign * t, value));
        }
    }
    let (mu, _) = best?;
    interval_certificate_is_valid(f, h, l, u, mu, tols).then_some(mu)
}

/// The matrix whose PSD-feasibility for some `nu >= 0` defines the
/// exceptional case of the interval lemma (affine `h = 2 b^T x + d`).
///
/// Writing `x = V y + s b / (2 b^T b)` with `V` a basis of `N(b^T)` makes
/// `h = s + d`; the matrix is the lift of `f` in `(y, s)` plus
/// `nu (s - l + d)(s - u + d)`.
pub fn exception_matrix_interval<T: Real>(
    f: &QuadForm<T>,
    h: &QuadForm<T>,
    l: T,
    u: T,
    nu: T,
    tols: &Tolerances<T>,
) -> Result<SymMatrix<T>> {
    let (m0, m1) = exception_pencil(f, h, l, u, tols)?;
    Ok(m0.add_scaled(&m1, nu))
}

fn exception_pencil<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, l: T, u: T, tols: &Tolerances<T>) -> Result<(SymMatrix<T>, SymMatrix<T>)> {
    let n = f.dim();
    if h.dim() != n {
        return Err(Error::DimensionMismatch(format!("f has dimension {n} but h has {}", h.dim())));
    }
    let b = &h.lin;
    let bb = b.norm_squared();
    if bb == T::zero() {
        return Err(Error::Precondition("b must be nonzero".into()));
    }
    let row = DMatrix::from_row_slice(1, n, b.as_slice());
    let v = symlin::null_basis(&row, tols.eig);
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), (n, v.ncols())).copy_from(&v);
    m.set_column(n - 1, &(b / (T::lit(2.0) * bb)));
    let m0 = model::restrict_to_affine(f, &DVector::zeros(n), &m)?.lift();
    let (lo, hi) = (l - h.constant, u - h.constant);
    let mut s = QuadForm::constant_fn(n, lo * hi);
    s.quad = SymMatrix::from_diagonal(&unit_last(n, T::one()));
    s.lin = DVector::from_vec(unit_last(n, -(lo + hi) / T::lit(2.0)));
    Ok((m0, s.lift()))
}

fn unit_last<T: Real>(n: usize, v: T) -> Vec<T> {
    let mut e = vec![T::zero(); n];
    e[n - 1] = v;
    e
}

/// Searches `nu` in `[0, 2^40]` making the exception matrix PSD.
pub fn exception_nu<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, l: T, u: T, tols: &Tolerances<T>) -> Result<Option<T>> {
    let (m0, m1) = exception_pencil(f, h, l, u, tols)?;
    let cap = T::lit(2f64.powi(40));
    let r = symlin::max_lambda_min_affine_from(&m0, &m1, Domain::new(T::zero(), cap), T::zero(), T::one(), tols);
    let tol = tols.sign_tol(m0.norm_inf() + r.arg * m1.norm_inf());
    // A maximum sitting exactly on the tolerance at nu = 0 still counts as
    // feasible: ties fire the exception.
    Ok((r.value >= -tol).then_some(r.arg))
}

/// The interval S-lemma: `l <= h(x) <= u => f(x) >= 0` versus a real `mu`
/// with `f + mu_- (h - u) + mu_+ (l - h) >= 0` everywhere.
pub fn interval_slemma<T: Real>(
    f: &QuadForm<T>,
    h: &QuadForm<T>,
    l: T,
    u: T,
    tols: &Tolerances<T>,
    seed: u64,
) -> Result<IntervalSLemmaVerdict<T>> {
    let p = GtrsProblem::new(f.clone(), h.clone(), l, u)?;
    if l == u {
        return degenerate_interval(f, h, l, tols, seed);
    }
    if !strict_feasibility(&p, tols) {
        return Err(Error::StrictFeasibilityViolation);
    }
    let mut notes = Vec::new();

    let n_neg = symlin::spectrum(&f.quad, tols.eig).n_neg();
    let b_zero = h.quad.norm_inf() <= tols.zero_matrix * (T::one() + f.quad.norm_inf());
    let nu = if n_neg == 1 && b_zero && h.lin.norm() > T::zero() {
        exception_nu(f, h, l, u, tols)?
    } else {
        None
    };

    let out = solve_gtrs(&p, tols, seed)?;
    let e1_tol = T::lit(10.0) * tols.sign_tol(f.data_norm());
    let i1 = out.status != Status::Unbounded && out.value >= -e1_tol;
    let counterexample = if i1 { None } else { interval_counterexample(&p, &out, tols, seed) };
    if !i1 && counterexample.is_none() {
        notes.push("no explicit counterexample found".into());
    }

    let mut mu = None;
    let candidates = [
        Some(T::zero()),
        out.lower.as_ref().and_then(|o| o.mu_star).map(|m| -m),
        out.upper.as_ref().and_then(|o| o.mu_star).map(|m| -m),
        out.mu_star.map(|m| -m),
    ];
    for c in candidates.into_iter().flatten() {
        if interval_certificate_is_valid(f, h, l, u, c, tols) {
            mu = Some(c);
            break;
        }
    }
    if mu.is_none() {
        mu = interval_certificate_search(f, h, l, u, tols);
    }
    let i2 = mu.is_some();
    let equivalence_holds = nu.is_none();
    if equivalence_holds && i1 != i2 {
        notes.push(format!("boundary: numeric verdicts disagree (I1 = {i1}, I2 = {i2})"));
    }
    Ok(IntervalSLemmaVerdict {
        equivalence_holds,
        i1_true: i1,
        i2_true: i2,
        mu,
        exception_nu: nu,
        counterexample,
        branch: None,
        notes,
    })
}

fn interval_counterexample<T: Real>(p: &GtrsProblem<T>, out: &GtrsOutcome<T>, tols: &Tolerances<T>, seed: u64) -> Option<DVector<T>> {
    if let Some(x) = &out.x_star {
        if p.objective.value(x) < T::zero() {
            return Some(x.clone());
        }
    }
    let target = if out.value.is_inf() { -T::one() } else { out.value / T::lit(2.0) };
    let (level, sub) = match out.source {
        Source::UpperBoundary => (p.u, out.upper.as_ref()),
        _ => (p.l, out.lower.as_ref()),
    };
    let sub = sub?;
    qp1eqc::feasible_point_below(&p.boundary(level), sub, target, tols, seed)
}

/// `l = u`: the equality lemma for `h - l`. Its multiplier `lambda`
/// certifies `f + lambda (h - l)`, which is the interval combination with
/// `mu = -lambda`.
fn degenerate_interval<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, l: T, tols: &Tolerances<T>, seed: u64) -> Result<IntervalSLemmaVerdict<T>> {
    let v = slemma::slemma_equality(f, &h.shifted(l), tols, seed)?;
    Ok(IntervalSLemmaVerdict {
        equivalence_holds: v.equivalence_holds,
        i1_true: v.e1_true,
        i2_true: v.e2_true,
        mu: v.certificate.map(|m| -m),
        exception_nu: None,
        counterexample: v.counterexample,
        branch: Some(v.branch),
        notes: v.details.notes,
    })
}
