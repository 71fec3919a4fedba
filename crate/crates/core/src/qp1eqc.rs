//! Global solver for `inf { f(x) : h(x) = 0 }`.
//!
//! Problems with `B = 0`, or whose constraint takes only one sign, have an
//! affine feasible set and reduce to unconstrained minimization. All others
//! are solved through the one-dimensional Lagrangian dual
//!
//! ```text
//! d(mu) = c + mu d - (a + mu b)^T (A + mu B)^+ (a + mu b)
//! ```
//!
//! maximized over the pencil interval `{mu : A + mu B >= 0}` using
//! `d'(mu) = h(x(mu))` with `x(mu) = -(A + mu B)^+ (a + mu b)`. A primal
//! minimizer is then recovered from the Kuhn-Tucker set `y0 + N(A + mu* B)`,
//! or the infimum is certified unattained when the dual feasible set is a
//! single point and `h` has no root on that set.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{self, Qp1eqcProblem, QuadForm, Unconstrained};
use crate::scalar::Real;
use crate::slemma;
use crate::symlin::{self, PencilInterval, SymMatrix};
use crate::tol::Tolerances;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20240101;

/// Cap on hard-case direction attempts in [`recover_primal`].
pub const MAX_RECOVERY_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Unbounded,
    Unattained,
    Attained,
}

/// Which solution path produced an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Route {
    /// Affine feasible set, unconstrained minimization in reduced variables.
    Reduced,
    /// Dual maximization over the pencil interval.
    Pencil,
}

/// Which of the two no-root conditions certifies unattainability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolusetCase {
    /// `h` is bounded below by a positive number on the Kuhn-Tucker set.
    Positive,
    /// `h` is bounded above by a negative number on the Kuhn-Tucker set.
    Negative,
}

/// Data of the unattainability certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct AttainabilityWitness<T: Real> {
    pub y0: DVector<T>,
    /// Basis of `N(A + mu* B)`.
    pub v: DMatrix<T>,
    /// `h(y0) - (B y0 + b)^T V (V^T B V)^+ V^T (B y0 + b)`.
    pub scalar: T,
    pub case: SolusetCase,
}

/// A feasible ray `x0 + t * direction`, `t >= 0`, along which `f -> -inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentRay<T: Real> {
    pub origin: DVector<T>,
    pub direction: DVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome<T: Real> {
    pub status: Status,
    /// Optimal value or infimum; `-inf` when unbounded.
    pub value: T,
    pub x_star: Option<DVector<T>>,
    pub mu_star: Option<T>,
    pub witness: Option<AttainabilityWitness<T>>,
    pub ray: Option<DescentRay<T>>,
    pub route: Route,
    /// Present exactly when the pencil route ran.
    pub pencil: Option<PencilInterval<T>>,
}

/// One evaluation of the dual function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualSample<T> {
    pub mu: T,
    pub value: T,
    pub range_feasible: bool,
}

/// Maximization record of the dual function.
#[derive(Debug, Clone, PartialEq)]
pub struct DualProfile<T: Real> {
    pub interval: PencilInterval<T>,
    /// `None` when the dual is `-inf` everywhere.
    pub mu_star: Option<T>,
    pub value: T,
    /// The dual feasible set is the single point `mu_star`.
    pub single_point: bool,
    /// Basis of the common null space of `A` and `B`.
    pub common_null: DMatrix<T>,
    pub trace: Vec<DualSample<T>>,
}

fn lagrangian<T: Real>(p: &Qp1eqcProblem<T>, mu: T) -> QuadForm<T> {
    p.objective.add_scaled(&p.constraint, mu)
}

/// `d(mu)`, or `-inf` when `A + mu B` is not PSD or `a + mu b` is outside its
/// range.
pub fn dual_value<T: Real>(p: &Qp1eqcProblem<T>, mu: T, tols: &Tolerances<T>) -> T {
    dual_sample(p, mu, tols).value
}

fn dual_sample<T: Real>(p: &Qp1eqcProblem<T>, mu: T, tols: &Tolerances<T>) -> DualSample<T> {
    let l = lagrangian(p, mu);
    let s = symlin::spectrum(&l.quad, tols.eig);
    let infeasible = DualSample { mu, value: T::neg_infinity(), range_feasible: false };
    if !s.is_psd() {
        return infeasible;
    }
    if !symlin::in_range(&l.quad, &l.lin, tols.eig) {
        return infeasible;
    }
    let pinv = symlin::pinv(&l.quad, tols.eig);
    let value = l.constant - l.lin.dot(&pinv.mul_vec(&l.lin));
    DualSample { mu, value, range_feasible: true }
}

/// `x(mu) = -(A + mu B)^+ (a + mu b)`.
pub fn stationary_point<T: Real>(p: &Qp1eqcProblem<T>, mu: T, tols: &Tolerances<T>) -> DVector<T> {
    let l = lagrangian(p, mu);
    -symlin::pinv(&l.quad, tols.eig).mul_vec(&l.lin)
}

fn is_zero_matrix<T: Real>(b: &SymMatrix<T>, a: &SymMatrix<T>, tols: &Tolerances<T>) -> bool {
    b.norm_inf() <= tols.zero_matrix * (T::one() + a.norm_inf())
}

/// Maximizes the dual function over the pencil interval.
pub fn maximize_dual<T: Real>(p: &Qp1eqcProblem<T>, tols: &Tolerances<T>) -> Result<DualProfile<T>> {
    let (a, b) = (&p.objective.quad, &p.constraint.quad);
    let interval = symlin::pencil_interval(a, b, tols)?;
    let n = p.dim();
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(a.as_matrix());
    stacked.view_mut((n, 0), (n, n)).copy_from(b.as_matrix());
    let common_null = symlin::null_basis(&stacked, tols.eig);
    let mut profile = DualProfile {
        interval,
        mu_star: None,
        value: T::neg_infinity(),
        single_point: false,
        common_null: common_null.clone(),
        trace: Vec::new(),
    };
    if interval.empty {
        return Ok(profile);
    }

    let ka = common_null.transpose() * &p.objective.lin;
    let kb = common_null.transpose() * &p.constraint.lin;
    let vtol = tols.sign_tol(p.objective.lin.norm() + p.constraint.lin.norm());
    let sample = |mu: T, trace: &mut Vec<DualSample<T>>| {
        let s = dual_sample(p, mu, tols);
        trace.push(s);
        s
    };

    // Along the common null space the Lagrangian is affine, so a + mu b must
    // vanish there; a nonzero K^T b pins mu to a single value.
    if kb.norm() > vtol {
        let mu = -ka.dot(&kb) / kb.norm_squared();
        let residual = (&ka + &kb * mu).norm();
        let inside = interval.contains(mu)
            || (mu - interval.lo).abs() <= tols.endpoint * (T::one() + mu.abs()) * T::lit(100.0)
            || (mu - interval.hi).abs() <= tols.endpoint * (T::one() + mu.abs()) * T::lit(100.0);
        if residual > vtol || !inside {
            return Ok(profile);
        }
        let s = sample(mu, &mut profile.trace);
        if s.range_feasible {
            profile.mu_star = Some(mu);
            profile.value = s.value;
            profile.single_point = true;
        }
        return Ok(profile);
    }
    if ka.norm() > vtol {
        return Ok(profile);
    }

    if interval.is_singleton(tols.singleton) {
        let mu = interval.lo;
        let s = sample(mu, &mut profile.trace);
        if s.range_feasible {
            profile.mu_star = Some(mu);
            profile.value = s.value;
            profile.single_point = true;
        }
        return Ok(profile);
    }

    let h = &p.constraint;
    let dprime = |mu: T| h.value(&stationary_point(p, mu, tols));
    let start = interval.peak;
    let s0 = dprime(start);
    let flat = p.feas_tol(tols);
    let mu_c = if s0.abs() <= flat * T::lit(1e-3) {
        start
    } else {
        // d' is nonincreasing; walk toward the side where d increases.
        let dir = if s0 > T::zero() { T::one() } else { -T::one() };
        let end = if s0 > T::zero() { interval.hi } else { interval.lo };
        let mut inside = start;
        let mut outside = end;
        if end.is_inf() {
            let mut step = T::one();
            loop {
                let t = start + dir * step;
                if t.abs() >= tols.mu_cap {
                    outside = dir * tols.mu_cap.max(start.abs());
                    inside = outside;
                    break;
                }
                if dprime(t) * dir > T::zero() {
                    inside = t;
                    step *= T::lit(2.0);
                } else {
                    outside = t;
                    break;
                }
            }
        }
        for _ in 0..300 {
            let mid = (inside + outside) / T::lit(2.0);
            if (outside - inside).abs() <= tols.arg * (T::one() + mid.abs()) {
                break;
            }
            if dprime(mid) * dir > T::zero() {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        (inside + outside) / T::lit(2.0)
    };

    let mut best = sample(mu_c, &mut profile.trace);
    for end in [interval.lo, interval.hi] {
        if end.is_inf() {
            continue;
        }
        let near = (end - mu_c).abs() <= T::lit(1e-6) * (T::one() + end.abs());
        let s = sample(end, &mut profile.trace);
        let slack = T::lit(1e-9) * (T::one() + best.value.abs());
        // A nearby endpoint wins ties. A distant one must be strictly better,
        // which happens when tolerance cuts the dual domain into pieces.
        let better = if near { s.value >= best.value - slack } else { s.value > best.value + slack };
        if s.range_feasible && (!best.range_feasible || better) {
            best = s;
        }
    }
    if best.range_feasible {
        profile.mu_star = Some(best.mu);
        profile.value = best.value;
    }
    Ok(profile)
}

/// Affine description `x0 + span(Z)` of `{h = 0}` when `B = 0` or `h` takes
/// one sign only. `None` when the set is empty.
pub(crate) fn affine_feasible_set<T: Real>(
    h: &QuadForm<T>,
    a_scale: &SymMatrix<T>,
    tols: &Tolerances<T>,
) -> Option<(DVector<T>, DMatrix<T>)> {
    let n = h.dim();
    let ftol = tols.feas * (T::one() + h.constant.abs() + h.lin.norm() + h.quad.norm_inf());
    if is_zero_matrix(&h.quad, a_scale, tols) {
        let bb = h.lin.norm_squared();
        if h.lin.norm() <= tols.eig * (T::one() + h.lin.norm()) {
            return if h.constant.abs() <= ftol {
                Some((DVector::zeros(n), DMatrix::identity(n, n)))
            } else {
                None
            };
        }
        let x0 = &h.lin * (-h.constant / (T::lit(2.0) * bb));
        let row = DMatrix::from_row_slice(1, n, h.lin.as_slice());
        return Some((x0, symlin::null_basis(&row, tols.eig)));
    }
    let x0 = -symlin::pinv(&h.quad, tols.eig).mul_vec(&h.lin);
    if h.value(&x0).abs() > ftol {
        return None;
    }
    Some((x0, symlin::null_basis(h.quad.as_matrix(), tols.eig)))
}

fn solve_reduced<T: Real>(p: &Qp1eqcProblem<T>, tols: &Tolerances<T>) -> Result<SolveOutcome<T>> {
    let (x0, z) = affine_feasible_set(&p.constraint, &p.objective.quad, tols).ok_or(Error::InfeasibleConstraint)?;
    let reduced = model::restrict_to_affine(&p.objective, &x0, &z)?;
    let mut out = SolveOutcome {
        status: Status::Attained,
        value: T::zero(),
        x_star: None,
        mu_star: None,
        witness: None,
        ray: None,
        route: Route::Reduced,
        pencil: None,
    };
    match model::minimize_unconstrained(&reduced, tols) {
        Unconstrained::Unbounded { direction } => {
            out.status = Status::Unbounded;
            out.value = T::neg_infinity();
            out.ray = Some(DescentRay { origin: x0, direction: &z * direction });
        }
        Unconstrained::Attained { x: y, value } => {
            let x = &x0 + &z * y;
            out.value = value;
            out.mu_star = reduced_multiplier(p, &x, tols);
            out.x_star = Some(x);
        }
    }
    Ok(out)
}

/// Least-squares multiplier from `(A x + a) + mu (B x + b) = 0`, kept only
/// when the residual vanishes and `A + mu B` is PSD.
fn reduced_multiplier<T: Real>(p: &Qp1eqcProblem<T>, x: &DVector<T>, tols: &Tolerances<T>) -> Option<T> {
    let gf = p.objective.quad.mul_vec(x) + &p.objective.lin;
    let gh = p.constraint.quad.mul_vec(x) + &p.constraint.lin;
    let scale = T::one() + p.data_norm() * (T::one() + x.norm());
    let mu = if gh.norm() <= tols.eig * scale {
        if gf.norm() > T::lit(1e-6) * scale {
            return None;
        }
        T::zero()
    } else {
        -gf.dot(&gh) / gh.norm_squared()
    };
    let res = (&gf + &gh * mu).norm();
    let psd = symlin::spectrum(&p.objective.quad.add_scaled(&p.constraint.quad, mu), tols.eig).is_psd();
    (res <= T::lit(1e-6) * scale && psd).then_some(mu)
}

/// Globally solves the problem. `seed` drives the randomized directions of
/// hard-case recovery.
pub fn solve<T: Real>(p: &Qp1eqcProblem<T>, tols: &Tolerances<T>, seed: u64) -> Result<SolveOutcome<T>> {
    let h = &p.constraint;
    let range = model::value_range(h, tols);
    if !range.contains_approx(T::zero(), p.feas_tol(tols)) {
        return Err(Error::InfeasibleConstraint);
    }
    if is_zero_matrix(&h.quad, &p.objective.quad, tols) || !slemma::assumption1_holds(h, tols)? {
        return solve_reduced(p, tols);
    }

    let profile = maximize_dual(p, tols)?;
    let mut out = SolveOutcome {
        status: Status::Unbounded,
        value: T::neg_infinity(),
        x_star: None,
        mu_star: None,
        witness: None,
        ray: None,
        route: Route::Pencil,
        pencil: Some(profile.interval),
    };
    let Some(mu) = profile.mu_star else {
        out.ray = unbounded_ray(p, &profile, tols);
        return Ok(out);
    };
    let mu = polish_multiplier(p, mu, &profile, tols);
    out.mu_star = Some(mu);
    out.value = profile.value;

    let kkt = kkt_set(p, mu, tols);
    if !kkt.restricted_has_root {
        if profile.single_point || profile.interval.is_singleton(tols.singleton) {
            out.status = Status::Unattained;
            out.witness = Some(kkt.witness());
            return Ok(out);
        }
        return Err(Error::HardCaseRecoveryFailed(0));
    }
    let x = recover_primal(p, mu, tols, seed)?;
    out.status = Status::Attained;
    out.value = p.objective.value(&x);
    out.x_star = Some(x);
    Ok(out)
}

/// Refines an interior dual maximizer so that `h(x(mu)) = 0` to the
/// feasibility tolerance.
///
/// On the interior of the pencil interval `h(x(mu))` is the derivative of
/// the concave dual, hence nonincreasing, and a sign-change bracket around
/// `mu` can be bisected. This matters when `A + mu B` is nearly singular:
/// `x(mu)` then moves far under perturbations of `mu` below the argument
/// tolerance of the dual search.
fn polish_multiplier<T: Real>(p: &Qp1eqcProblem<T>, mu: T, profile: &DualProfile<T>, tols: &Tolerances<T>) -> T {
    let interval = &profile.interval;
    // Off the set where the dual is finite, x(mu) is not stationary.
    let phi = |m: T| dual_sample(p, m, tols).range_feasible.then(|| p.constraint.value(&stationary_point(p, m, tols)));
    let ftol = p.feas_tol_at(&stationary_point(p, mu, tols), tols);
    let Some(f0) = phi(mu) else { return mu };
    if profile.single_point || f0.abs() <= ftol || !(interval.lo < mu && mu < interval.hi) {
        return mu;
    }
    let positive = f0 > T::zero();
    let two = T::lit(2.0);
    let dir = if positive { T::one() } else { -T::one() };
    let mut step = T::machine_eps() * T::lit(16.0) * (T::one() + mu.abs());
    let mut near = (mu, f0);
    let mut far = None;
    for _ in 0..200 {
        let cand = mu + dir * step;
        if !(interval.lo < cand && cand < interval.hi) {
            break;
        }
        let Some(fc) = phi(cand) else { break };
        if fc.abs() <= ftol {
            return cand;
        }
        if (fc > T::zero()) != positive {
            far = Some((cand, fc));
            break;
        }
        near = (cand, fc);
        step *= two;
    }
    let Some(mut far) = far else { return mu };
    for _ in 0..200 {
        let mid = (near.0 + far.0) / two;
        let Some(fm) = phi(mid) else { break };
        if fm.abs() <= ftol {
            return mid;
        }
        if (fm > T::zero()) == positive {
            near = (mid, fm);
        } else {
            far = (mid, fm);
        }
        if (far.0 - near.0).abs() <= T::machine_eps() * (T::one() + mid.abs()) {
            break;
        }
    }
    let best = if near.1.abs() < far.1.abs() { near } else { far };
    if best.1.abs() < f0.abs() { best.0 } else { mu }
}

struct KktSet<T: Real> {
    y0: DVector<T>,
    v: DMatrix<T>,
    restricted: QuadForm<T>,
    restricted_has_root: bool,
    scalar: T,
    case: SolusetCase,
}

impl<T: Real> KktSet<T> {
    fn witness(&self) -> AttainabilityWitness<T> {
        AttainabilityWitness { y0: self.y0.clone(), v: self.v.clone(), scalar: self.scalar, case: self.case }
    }
}

fn kkt_set<T: Real>(p: &Qp1eqcProblem<T>, mu: T, tols: &Tolerances<T>) -> KktSet<T> {
    let l = lagrangian(p, mu);
    let y0 = stationary_point(p, mu, tols);
    let v = symlin::null_basis(l.quad.as_matrix(), tols.eig);
    let h = &p.constraint;
    let restricted = model::restrict_to_affine(h, &y0, &v).expect("dimensions agree");
    let range = model::value_range(&restricted, tols);
    let ftol = p.feas_tol_at(&y0, tols);
    let restricted_has_root = range.contains_approx(T::zero(), ftol);
    let vbv = h.quad.congruence(&v);
    let g = v.transpose() * (h.quad.mul_vec(&y0) + &h.lin);
    let scalar = h.value(&y0) - g.dot(&symlin::pinv(&vbv, tols.eig).mul_vec(&g));
    let case = if range.lo > T::zero() { SolusetCase::Positive } else { SolusetCase::Negative };
    KktSet { y0, v, restricted, restricted_has_root, scalar, case }
}

/// Finds a feasible point in the Kuhn-Tucker set `y0 + N(A + mu B)`.
pub fn recover_primal<T: Real>(p: &Qp1eqcProblem<T>, mu: T, tols: &Tolerances<T>, seed: u64) -> Result<DVector<T>> {
    let kkt = kkt_set(p, mu, tols);
    let h = &p.constraint;
    if h.value(&kkt.y0).abs() <= p.feas_tol_at(&kkt.y0, tols) {
        return Ok(kkt.y0);
    }
    let k = kkt.v.ncols();
    if k == 0 {
        return Err(Error::HardCaseRecoveryFailed(0));
    }
    let r = &kkt.restricted;
    let mut dirs: Vec<DVector<T>> = Vec::new();
    let s = symlin::spectrum(&r.quad, tols.eig);
    for i in 0..k {
        dirs.push(s.vector(i));
    }
    if r.lin.norm() > T::zero() {
        dirs.push(r.lin.clone());
    }
    let range = model::value_range(r, tols);
    dirs.extend(range.lo_point.iter().chain(range.hi_point.iter()).filter(|w| w.norm() > T::zero()).cloned());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = DVector::zeros(k);
    let mut attempts = 0;
    while attempts < MAX_RECOVERY_ATTEMPTS {
        let u = if attempts < dirs.len() { dirs[attempts].clone() } else { gaussian(k, &mut rng) };
        attempts += 1;
        let roots = r.line_roots(&zero, &u);
        let best = roots.into_iter().min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap_or(std::cmp::Ordering::Equal));
        if let Some(t) = best {
            let x = &kkt.y0 + &kkt.v * (&u * t);
            if h.value(&x).abs() <= p.feas_tol_at(&x, tols) {
                return Ok(x);
            }
        }
    }
    Err(Error::HardCaseRecoveryFailed(attempts))
}

pub(crate) fn gaussian<T: Real>(k: usize, rng: &mut ChaCha8Rng) -> DVector<T> {
    DVector::from_iterator(
        k,
        (0..k).map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::lit(z)
        }),
    )
}

/// Checks the global optimality conditions: feasibility, stationarity of
/// the Lagrangian at `x`, and `A + mu B >= 0`. Requires the two-sided Slater
/// condition and `B != 0`.
pub fn verify_global_optimality<T: Real>(
    p: &Qp1eqcProblem<T>,
    x: &DVector<T>,
    mu: T,
    tols: &Tolerances<T>,
) -> Result<bool> {
    if is_zero_matrix(&p.constraint.quad, &p.objective.quad, tols) {
        return Err(Error::HypothesisViolation("B = 0".into()));
    }
    if !slemma::assumption1_holds(&p.constraint, tols)? {
        return Err(Error::HypothesisViolation("h does not take both signs".into()));
    }
    let l = lagrangian(p, mu);
    let feasible = p.constraint.evaluate(x)?.abs() <= p.feas_tol_at(x, tols);
    let residual = (l.quad.mul_vec(x) + &l.lin).norm();
    let stationary = residual <= T::lit(1e-6) * (T::one() + p.data_norm() * (T::one() + mu.abs()));
    let psd = symlin::spectrum(&l.quad, tols.eig).is_psd();
    Ok(feasible && stationary && psd)
}

/// `|primal - dual|` at the solution. For unattained problems the primal
/// infimum is the certified dual value, so the gap is zero by construction.
pub fn strong_duality_gap<T: Real>(p: &Qp1eqcProblem<T>, tols: &Tolerances<T>, seed: u64) -> Result<T> {
    let out = solve(p, tols, seed)?;
    if out.status == Status::Unbounded {
        return Err(Error::Precondition("the problem is unbounded below".into()));
    }
    let profile = maximize_dual(p, tols)?;
    if profile.mu_star.is_none() {
        return Err(Error::NoCertificate("dual maximum not attained".into()));
    }
    Ok((out.value - profile.value).abs())
}

fn unbounded_ray<T: Real>(p: &Qp1eqcProblem<T>, profile: &DualProfile<T>, tols: &Tolerances<T>) -> Option<DescentRay<T>> {
    let k = &profile.common_null;
    if k.ncols() == 0 {
        return None;
    }
    let ka = k.transpose() * &p.objective.lin;
    let kb = k.transpose() * &p.constraint.lin;
    let coeff = if kb.norm() > T::zero() { &ka - &kb * (ka.dot(&kb) / kb.norm_squared()) } else { ka };
    if coeff.norm() <= tols.sign_tol(p.objective.lin.norm()) {
        return None;
    }
    // Along k, h is unchanged and f changes by 2 t a^T k.
    let dir = -(k * coeff);
    let origin = feasible_point(&p.constraint, tols)?;
    Some(DescentRay { origin, direction: dir })
}

/// Some point with `h(x) = 0`, if one is found by exact line searches.
pub fn feasible_point<T: Real>(h: &QuadForm<T>, tols: &Tolerances<T>) -> Option<DVector<T>> {
    let n = h.dim();
    let ftol = tols.feas * (T::one() + h.constant.abs() + h.lin.norm() + h.quad.norm_inf());
    let origin = DVector::zeros(n);
    if h.value(&origin).abs() <= ftol {
        return Some(origin);
    }
    let range = model::value_range(h, tols);
    let mut dirs: Vec<DVector<T>> = vec![h.lin.clone()];
    let s = symlin::spectrum(&h.quad, tols.eig);
    dirs.extend((0..n).map(|i| s.vector(i)));
    dirs.extend(range.lo_point.iter().chain(range.hi_point.iter()).cloned());
    dirs.extend((0..n).map(|i| DVector::from_fn(n, |j, _| if i == j { T::one() } else { T::zero() })));
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    for _ in 0..32 {
        dirs.push(gaussian(n, &mut rng));
    }
    for u in dirs {
        if u.norm() == T::zero() {
            continue;
        }
        for t in h.line_roots(&origin, &u) {
            let x = &u * t;
            if h.value(&x).abs() <= ftol {
                return Some(x);
            }
        }
    }
    None
}

/// Searches for `x` with `h(x) = 0` (within the feasibility tolerance) and
/// `f(x) < target`, using the structure recorded in `out` first and seeded
/// multi-scale line sampling second.
pub fn feasible_point_below<T: Real>(
    p: &Qp1eqcProblem<T>,
    out: &SolveOutcome<T>,
    target: T,
    tols: &Tolerances<T>,
    seed: u64,
) -> Option<DVector<T>> {
    let f = &p.objective;
    let h = &p.constraint;
    let ftol = p.feas_tol(tols);
    let ok = |x: &DVector<T>| h.value(x).abs() <= ftol && f.value(x) < target;

    if let Some(x) = &out.x_star {
        if ok(x) {
            return Some(x.clone());
        }
    }
    if let Some(ray) = &out.ray {
        let mut t = T::one();
        for _ in 0..80 {
            let x = &ray.origin + &ray.direction * t;
            if ok(&x) {
                return Some(x);
            }
            t *= T::lit(2.0);
        }
    }

    // Anchors along promising directions, pulled back onto {h = 0} by exact
    // line searches.
    let n = p.dim();
    let mut anchors: Vec<(DVector<T>, DVector<T>)> = Vec::new();
    let base = feasible_point(h, tols).unwrap_or_else(|| DVector::zeros(n));
    if let Some(w) = &out.witness {
        for j in 0..w.v.ncols() {
            anchors.push((w.y0.clone(), w.v.column(j).into_owned()));
        }
    }
    if let Some(interval) = &out.pencil {
        let l = lagrangian(p, interval.peak).quad;
        let s = symlin::spectrum(&l, tols.eig);
        let v = isotropic_bottom_vector(&s, &h.quad, tols);
        anchors.push((base.clone(), v));
    }
    let sa = symlin::spectrum(&f.quad, tols.eig);
    for i in 0..n {
        if sa.eigenvalues[i] < T::zero() {
            anchors.push((base.clone(), sa.vector(i)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(T, DVector<T>)> = None;
    let consider = |x: DVector<T>, best: &mut Option<(T, DVector<T>)>| {
        if h.value(&x).abs() <= ftol {
            let v = f.value(&x);
            if v < target && best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                *best = Some((v, x));
            }
        }
    };
    for (x0, v) in &anchors {
        for sign in [T::one(), -T::one()] {
            let mut alpha = T::lit(0.5);
            for _ in 0..14 {
                let anchor = x0 + v * (alpha * sign);
                let mut us = vec![h.gradient(&anchor), h.quad.mul_vec(v)];
                us.extend((0..4).map(|_| gaussian(n, &mut rng)));
                for u in us {
                    if u.norm() == T::zero() {
                        continue;
                    }
                    for t in h.line_roots(&anchor, &u) {
                        consider(&anchor + &u * t, &mut best);
                    }
                }
                if best.is_some() {
                    return best.map(|(_, x)| x);
                }
                alpha *= T::lit(2.0);
            }
        }
    }
    // Last resort: random lines through random anchors at several scales.
    for round in 0..4000 {
        let scale = T::lit(10f64.powi((round % 7) - 2));
        let anchor = gaussian(n, &mut rng) * scale + &base;
        let u = gaussian(n, &mut rng);
        for t in h.line_roots(&anchor, &u) {
            consider(&anchor + &u * t, &mut best);
        }
        if best.is_some() && round % 100 == 99 {
            break;
        }
    }
    best.map(|(_, x)| x)
}

/// A unit vector in the bottom eigenspace of `s` with `v^T B v` as close to
/// zero as the eigenspace allows.
fn isotropic_bottom_vector<T: Real>(s: &symlin::Spectrum<T>, b: &SymMatrix<T>, tols: &Tolerances<T>) -> DVector<T> {
    let lmin = s.min();
    let width = T::lit(10.0) * s.tol.max(tols.eig);
    let idx: Vec<usize> = (0..s.dim()).filter(|&i| s.eigenvalues[i] <= lmin + width).collect();
    let e = s.eigenvectors.select_columns(idx.iter());
    let ebe = b.congruence(&e);
    let se = symlin::spectrum(&ebe, T::zero());
    let (lo, hi) = (se.min(), se.max());
    let w = if lo < T::zero() && hi > T::zero() {
        let p = se.vector(0) * (T::one() / (-lo).sqrt());
        let q = se.vector(se.dim() - 1) * (T::one() / hi.sqrt());
        p + q
    } else if lo.abs() <= hi.abs() {
        se.vector(0)
    } else {
        se.vector(se.dim() - 1)
    };
    let v = e * w;
    let nv = v.norm();
    v / nv
}
