//! Decision procedures for the S-lemma with equality and its relatives.
//!
//! For quadratic `f` and `h` the two statements compared are
//!
//! ```text
//! (E1)  h(x) = 0  implies  f(x) >= 0
//! (E2)  f(x) + mu h(x) >= 0 for all x, for some real mu
//! ```
//!
//! (E2) always implies (E1). Whether the converse holds depends on whether
//! `h` takes both signs. When it does, the converse fails only in one narrow
//! configuration (a single negative eigenvalue of `A`, affine nonconstant
//! `h`, and a PSD reduced matrix). When it does not, the feasible set is
//! affine and the answer is a null-space condition on a lifted matrix.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::concave::Domain;
use crate::error::{Error, Result};
use crate::model::{self, Qp1eqcProblem, QuadForm};
use crate::qp1eqc::{self, Status};
use crate::scalar::Real;
use crate::symlin::{self, PencilInterval, SymMatrix};
use crate::tol::Tolerances;

/// Which result decided a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `h` takes one sign only and the reduced lifted matrix is positive
    /// definite.
    #[serde(rename = "AssumptionFails-a")]
    AssumptionFailsA,
    /// `h` takes one sign only, the reduced lifted matrix is PSD and its
    /// null space matches the null-space test.
    #[serde(rename = "AssumptionFails-b")]
    AssumptionFailsB,
    /// `h` takes one sign only and neither condition holds.
    #[serde(rename = "AssumptionFails-neither")]
    AssumptionFailsNeither,
    /// `h` takes both signs; the lemma holds.
    #[serde(rename = "Thm3-generic")]
    Thm3Generic,
    /// `h` takes both signs and the exceptional configuration occurs.
    #[serde(rename = "Thm3-exception")]
    Thm3Exception,
}

impl Branch {
    pub fn tag(&self) -> &'static str {
        match self {
            Branch::AssumptionFailsA => "AssumptionFails-a",
            Branch::AssumptionFailsB => "AssumptionFails-b",
            Branch::AssumptionFailsNeither => "AssumptionFails-neither",
            Branch::Thm3Generic => "Thm3-generic",
            Branch::Thm3Exception => "Thm3-exception",
        }
    }
}

/// Intermediate quantities behind a verdict.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerdictDetails<T: Real> {
    /// Reduced lifted matrix `W` (one-sign branch) or `Z^T A Z` (homogeneous).
    pub w_matrix: Option<SymMatrix<T>>,
    /// Whether the null space of `W` equals that of the null-space test
    /// matrix.
    pub null_spaces_match: Option<bool>,
    /// The exception-test matrix of the two-sign branch.
    pub m_matrix: Option<SymMatrix<T>>,
    /// Number of negative eigenvalues of `A`.
    pub n_neg_a: Option<usize>,
    /// Pencil interval used for (E2) in the one-sign branch.
    pub pencil: Option<PencilInterval<T>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SLemmaVerdict<T: Real> {
    /// (E1) and (E2) have the same truth value.
    pub equivalence_holds: bool,
    pub e1_true: bool,
    pub e2_true: bool,
    /// Multiplier `mu` certifying (E2).
    pub certificate: Option<T>,
    /// Feasible point with `f(x) < 0` refuting (E1).
    pub counterexample: Option<DVector<T>>,
    pub branch: Branch,
    pub details: VerdictDetails<T>,
}

/// `lambda_eps` with `f + lambda_eps h^exponent + eps (x^T x + 1) >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizedCertificate<T> {
    pub epsilon: T,
    pub lambda_eps: T,
    /// 1 when `B != 0`, 2 when `h` is affine.
    pub exponent: u8,
}

/// Sign restriction on the multiplier in [`e2_certificate_search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConstraint {
    Free,
    Nonneg,
}

fn check_dims<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>) -> Result<()> {
    if f.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!("f has dimension {} but h has {}", f.dim(), h.dim())));
    }
    Ok(())
}

fn feas_tol<T: Real>(h: &QuadForm<T>, tols: &Tolerances<T>) -> T {
    tols.feas * (T::one() + h.constant.abs() + h.lin.norm() + h.quad.norm_inf())
}

fn e1_tol<T: Real>(f: &QuadForm<T>, tols: &Tolerances<T>) -> T {
    T::lit(10.0) * tols.sign_tol(f.data_norm())
}

fn is_zero_b<T: Real>(b: &SymMatrix<T>, a: &SymMatrix<T>, tols: &Tolerances<T>) -> bool {
    b.norm_inf() <= tols.zero_matrix * (T::one() + a.norm_inf())
}

/// `h` takes both a negative and a positive value. Errors when `{h = 0}` is
/// empty.
pub fn assumption1_holds<T: Real>(h: &QuadForm<T>, tols: &Tolerances<T>) -> Result<bool> {
    let r = model::value_range(h, tols);
    let ftol = feas_tol(h, tols);
    if !r.contains_approx(T::zero(), ftol) {
        return Err(Error::InfeasibleConstraint);
    }
    let touches_lo = r.lo_attained && r.lo.abs() <= ftol;
    let touches_hi = r.hi_attained && r.hi.abs() <= ftol;
    Ok(!(touches_lo || touches_hi))
}

/// `lambda_min` tolerance for a certificate `M0 + mu M1`.
fn psd_tol<T: Real>(m0: &SymMatrix<T>, m1: &SymMatrix<T>, mu: T, tols: &Tolerances<T>) -> T {
    tols.sign_tol(m0.norm_inf() + mu.abs() * m1.norm_inf())
}

/// Checks that `lift(f) + mu lift(h)` is PSD within tolerance.
pub fn certificate_is_valid<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, mu: T, tols: &Tolerances<T>) -> bool {
    let (m0, m1) = (f.lift(), h.lift());
    symlin::lambda_min(&m0.add_scaled(&m1, mu)) >= -psd_tol(&m0, &m1, mu, tols)
}

/// Searches `mu` maximizing `lambda_min(lift(f) + mu lift(h))`; returns it
/// when the maximum is nonnegative within tolerance.
pub fn e2_certificate_search<T: Real>(
    f: &QuadForm<T>,
    h: &QuadForm<T>,
    sign: SignConstraint,
    tols: &Tolerances<T>,
) -> Option<T> {
    search_from(f, h, sign, T::one(), tols)
}

fn search_from<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, sign: SignConstraint, step: T, tols: &Tolerances<T>) -> Option<T> {
    let (m0, m1) = (f.lift(), h.lift());
    let domain = match sign {
        SignConstraint::Free => Domain::real_line(),
        SignConstraint::Nonneg => Domain::nonnegative(),
    };
    if symlin::semidefinite_pencil_feasible(&m0, &m1, tols) == Some(false) {
        return None;
    }
    let best = symlin::max_lambda_min_affine_from(&m0, &m1, domain, T::zero(), step, tols);
    if best.hit_cap {
        return symlin::retreat_from_cap(&m0, &m1, &best, T::zero(), tols);
    }
    let mut mu = best.arg;
    if sign == SignConstraint::Nonneg && mu < T::zero() {
        mu = T::zero();
    }
    (best.value >= -psd_tol(&m0, &m1, mu, tols)).then_some(mu)
}

/// Decides (E1) through the global solver. Returns the verdict and, when
/// (E1) fails, a feasible point with `f < 0`.
pub fn e1_check<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, tols: &Tolerances<T>, seed: u64) -> Result<(bool, Option<DVector<T>>)> {
    check_dims(f, h)?;
    let p = Qp1eqcProblem::new(f.clone(), h.clone())?;
    let out = qp1eqc::solve(&p, tols, seed)?;
    let tol = e1_tol(f, tols);
    let target = match out.status {
        Status::Unbounded => -T::one(),
        _ if out.value >= -tol => return Ok((true, None)),
        _ => out.value / T::lit(2.0),
    };
    Ok((false, qp1eqc::feasible_point_below(&p, &out, target, tols, seed)))
}

fn projector<T: Real>(basis: &DMatrix<T>) -> DMatrix<T> {
    basis * basis.transpose()
}

fn same_subspace<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> bool {
    a.ncols() == b.ncols() && (projector(a) - projector(b)).amax() <= T::lit(1e-6)
}

/// Shared logic of the one-sign branch applied to `(At, Bt)` with `Bt`
/// semidefinite: returns `(W, null spaces match, branch)`.
fn null_space_test<T: Real>(at: &SymMatrix<T>, z: &DMatrix<T>, tols: &Tolerances<T>) -> (SymMatrix<T>, Option<bool>, Branch, bool) {
    let w = at.congruence(z);
    let s = symlin::spectrum(&w, tols.eig);
    let e1 = s.is_psd();
    if s.is_pd() {
        return (w, None, Branch::AssumptionFailsA, e1);
    }
    if !e1 {
        return (w, None, Branch::AssumptionFailsNeither, e1);
    }
    let nw = symlin::null_basis(w.as_matrix(), tols.eig);
    let az = at.as_matrix() * z;
    let naz = symlin::null_basis(&az, tols.eig);
    let matched = same_subspace(&nw, &naz);
    let branch = if matched { Branch::AssumptionFailsB } else { Branch::AssumptionFailsNeither };
    (w, Some(matched), branch, e1)
}

/// In the one-sign branch (E2) holds exactly when `W` is positive definite
/// or semidefinite with matching null spaces. The numeric search only
/// supplies the multiplier: near-certificates found far out on an
/// asymptotically PSD pencil are discarded when the structure rules them out.
fn structural_certificate<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, branch: Branch, tols: &Tolerances<T>, notes: &mut Vec<String>) -> Option<T> {
    let found = e2_certificate_search(f, h, SignConstraint::Free, tols);
    match (branch, found) {
        (Branch::AssumptionFailsNeither, Some(mu)) => {
            notes.push(format!("discarded numeric near-certificate at mu = {}", mu.as_f64()));
            None
        }
        (Branch::AssumptionFailsNeither, None) => None,
        (_, None) => {
            notes.push("structure guarantees a multiplier but the search found none".into());
            None
        }
        (_, found) => found,
    }
}

/// Homogeneous case: `f = x^T A x`, `h = x^T B x` with `B` semidefinite.
pub fn homogeneous_equivalence<T: Real>(a: &SymMatrix<T>, b: &SymMatrix<T>, tols: &Tolerances<T>) -> Result<SLemmaVerdict<T>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("A is {}x{} but B is {}x{}", a.dim(), a.dim(), b.dim(), b.dim())));
    }
    let sb = symlin::spectrum(b, tols.eig);
    if sb.n_neg() > 0 && sb.n_pos() > 0 {
        return Err(Error::Precondition("B must be semidefinite".into()));
    }
    let z = symlin::null_basis(b.as_matrix(), tols.eig);
    let (w, matched, branch, e1) = null_space_test(a, &z, tols);
    let f = QuadForm::homogeneous(a.clone());
    let h = QuadForm::homogeneous(b.clone());
    let mut notes = Vec::new();
    let certificate = structural_certificate(&f, &h, branch, tols, &mut notes);
    let counterexample = if e1 {
        None
    } else {
        let s = symlin::spectrum(&w, tols.eig);
        let x = &z * s.vector(0);
        let scale = T::one() / (-s.min()).sqrt();
        Some(x * scale)
    };
    let pencil = symlin::pencil_interval(a, b, tols)?;
    Ok(SLemmaVerdict {
        equivalence_holds: !e1 || branch != Branch::AssumptionFailsNeither,
        e1_true: e1,
        e2_true: branch != Branch::AssumptionFailsNeither,
        certificate,
        counterexample,
        branch,
        details: VerdictDetails {
            w_matrix: Some(w),
            null_spaces_match: matched,
            pencil: Some(pencil),
            notes,
            ..Default::default()
        },
    })
}

/// One-sign branch: `h` does not take both signs but `{h = 0}` is nonempty.
pub fn theorem1_verdict<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, tols: &Tolerances<T>, seed: u64) -> Result<SLemmaVerdict<T>> {
    check_dims(f, h)?;
    if assumption1_holds(h, tols)? {
        return Err(Error::Precondition("h takes both signs".into()));
    }
    // Work with the PSD orientation of h; (E1) and (E2) are unchanged by
    // h -> -h up to the sign of the multiplier.
    let flip = symlin::spectrum(&h.quad, tols.eig).n_pos() == 0;
    let hh = if flip { h.scale(-T::one()) } else { h.clone() };
    let n = f.dim();
    let bp = symlin::pinv(&hh.quad, tols.eig).mul_vec(&hh.lin);
    let mut t = DMatrix::identity(n + 1, n + 1);
    for i in 0..n {
        t[(i, n)] = -bp[i];
    }
    let at = f.lift().congruence(&t);
    let bt = hh.quad.block_diag(&SymMatrix::zeros(1));
    let z = symlin::null_basis(hh.quad.as_matrix(), tols.eig);
    let mut zt = DMatrix::zeros(n + 1, z.ncols() + 1);
    zt.view_mut((0, 0), (n, z.ncols())).copy_from(&z);
    zt[(n, z.ncols())] = T::one();

    let (w, matched, branch, e1) = null_space_test(&at, &zt, tols);
    let pencil = symlin::pencil_interval(&at, &bt, tols)?;
    let mut details = VerdictDetails { w_matrix: Some(w), null_spaces_match: matched, pencil: Some(pencil), ..Default::default() };
    let certificate = structural_certificate(f, h, branch, tols, &mut details.notes);
    let counterexample = if e1 {
        None
    } else {
        let (_, x) = e1_check(f, h, tols, seed)?;
        if x.is_none() {
            details.notes.push("no explicit counterexample found".into());
        }
        x
    };
    Ok(SLemmaVerdict {
        equivalence_holds: !e1 || branch != Branch::AssumptionFailsNeither,
        e1_true: e1,
        e2_true: branch != Branch::AssumptionFailsNeither,
        certificate,
        counterexample,
        branch,
        details,
    })
}

/// The exception-test matrix of the two-sign branch for affine `h`:
/// the lift of `f` restricted to `{h = 0} = x0 + N(b^T)`.
pub fn exception_matrix<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, tols: &Tolerances<T>) -> Result<SymMatrix<T>> {
    check_dims(f, h)?;
    let b = &h.lin;
    let bb = b.norm_squared();
    if bb == T::zero() {
        return Err(Error::Precondition("b must be nonzero".into()));
    }
    let x0 = b * (-h.constant / (T::lit(2.0) * bb));
    let row = DMatrix::from_row_slice(1, b.len(), b.as_slice());
    let v = symlin::null_basis(&row, tols.eig);
    Ok(model::restrict_to_affine(f, &x0, &v)?.lift())
}

/// Two-sign branch.
pub fn theorem3_verdict<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, tols: &Tolerances<T>, seed: u64) -> Result<SLemmaVerdict<T>> {
    check_dims(f, h)?;
    if !assumption1_holds(h, tols)? {
        return Err(Error::Precondition("h must take both signs".into()));
    }
    let n_neg = symlin::spectrum(&f.quad, tols.eig).n_neg();
    let b_zero = is_zero_b(&h.quad, &f.quad, tols);
    let mut details = VerdictDetails { n_neg_a: Some(n_neg), ..Default::default() };
    if n_neg == 1 && b_zero {
        // Two signs with B = 0 forces b != 0.
        let m = exception_matrix(f, h, tols)?;
        let psd = symlin::spectrum(&m, tols.eig).is_psd();
        details.m_matrix = Some(m);
        if psd {
            details.notes.push("no multiplier exists although (E1) holds".into());
            return Ok(SLemmaVerdict {
                equivalence_holds: false,
                e1_true: true,
                e2_true: false,
                certificate: None,
                counterexample: None,
                branch: Branch::Thm3Exception,
                details,
            });
        }
    }
    let certificate = e2_certificate_search(f, h, SignConstraint::Free, tols);
    let (truth, counterexample) = if certificate.is_some() {
        (true, None)
    } else {
        let (e1, x) = e1_check(f, h, tols, seed)?;
        if e1 {
            details.notes.push("boundary: no multiplier found within tolerance although the infimum is nonnegative within tolerance".into());
        }
        if x.is_none() {
            details.notes.push("no explicit counterexample found".into());
        }
        (false, x)
    };
    Ok(SLemmaVerdict {
        equivalence_holds: true,
        e1_true: truth,
        e2_true: truth,
        certificate,
        counterexample,
        branch: Branch::Thm3Generic,
        details,
    })
}

/// Decides the S-lemma with equality for `(f, h)`.
pub fn slemma_equality<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, tols: &Tolerances<T>, seed: u64) -> Result<SLemmaVerdict<T>> {
    check_dims(f, h)?;
    if assumption1_holds(h, tols)? {
        theorem3_verdict(f, h, tols, seed)
    } else {
        theorem1_verdict(f, h, tols, seed)
    }
}

/// Homogeneous strict implication `x^T B x = 0, x != 0 => x^T A x > 0`,
/// decided by searching `mu` with `A + mu B` positive definite.
pub fn finsler<T: Real>(a: &SymMatrix<T>, b: &SymMatrix<T>, tols: &Tolerances<T>) -> Result<(bool, Option<T>)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("A is {}x{} but B is {}x{}", a.dim(), a.dim(), b.dim(), b.dim())));
    }
    let best = symlin::max_lambda_min_affine(a, b, Domain::real_line(), tols);
    let strict = best.value > psd_tol(a, b, best.arg, tols);
    Ok((strict, strict.then_some(best.arg)))
}

/// Classical S-lemma: `h(x) <= 0 => f(x) >= 0` versus a multiplier
/// `mu >= 0`, reduced to the equality lemma for `h(x) + z^2`.
pub fn slemma_inequality<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, tols: &Tolerances<T>, seed: u64) -> Result<SLemmaVerdict<T>> {
    check_dims(f, h)?;
    let r = model::value_range(h, tols);
    if !(r.lo < -feas_tol(h, tols)) {
        return Err(Error::SlaterViolation);
    }
    let n = f.dim();
    let mut v = theorem3_verdict(&f.extended(), &h.with_slack(), tols, seed)?;
    if let Some(mu) = v.certificate {
        let tol = tols.sign_tol(f.data_norm());
        if mu < T::zero() && mu >= -tol {
            v.certificate = Some(T::zero());
        } else if mu < T::zero() {
            v.certificate = None;
            v.e2_true = false;
            v.details.notes.push("negative multiplier rejected".into());
        }
    }
    v.counterexample = v.counterexample.map(|x| x.rows(0, n).into_owned());
    Ok(v)
}

/// Regularized multiplier for the equality lemma: valid for any `eps > 0`
/// whenever (E1) holds.
pub fn regularized_lambda<T: Real>(
    f: &QuadForm<T>,
    h: &QuadForm<T>,
    eps: T,
    tols: &Tolerances<T>,
    seed: u64,
) -> Result<RegularizedCertificate<T>> {
    regularized(f, h, eps, SignConstraint::Free, tols, seed)
}

fn regularized<T: Real>(
    f: &QuadForm<T>,
    h: &QuadForm<T>,
    eps: T,
    sign: SignConstraint,
    tols: &Tolerances<T>,
    seed: u64,
) -> Result<RegularizedCertificate<T>> {
    check_dims(f, h)?;
    if !(eps > T::zero()) {
        return Err(Error::Precondition("epsilon must be positive".into()));
    }
    let (e1, _) = e1_check(f, h, tols, seed)?;
    if !e1 {
        return Err(Error::E1Violated);
    }
    let affine = is_zero_b(&h.quad, &f.quad, tols);
    let (g, exponent) = if affine { (h.affine_square(), 2) } else { (h.clone(), 1) };
    let fe = f.regularized(eps);
    let lambda = search_from(&fe, &g, sign, T::one() / eps, tols)
        .ok_or_else(|| Error::NoCertificate(format!("no multiplier for epsilon = {}", eps.as_f64())))?;
    Ok(RegularizedCertificate { epsilon: eps, lambda_eps: lambda, exponent })
}

/// Checks a regularized certificate by an eigenvalue test.
pub fn regularized_certificate_is_valid<T: Real>(
    f: &QuadForm<T>,
    h: &QuadForm<T>,
    cert: &RegularizedCertificate<T>,
    tols: &Tolerances<T>,
) -> bool {
    let g = if cert.exponent == 2 { h.affine_square() } else { h.clone() };
    certificate_is_valid(&f.regularized(cert.epsilon), &g, cert.lambda_eps, tols)
}

/// Regularized classical S-lemma for constraints `h <= 0` that fail
/// Slater's condition: `lambda_eps >= 0` with
/// `f + lambda_eps (h + z^2) + eps (x^T x + z^2 + 1) >= 0`.
pub fn regularized_inequality<T: Real>(
    f: &QuadForm<T>,
    h: &QuadForm<T>,
    eps: T,
    tols: &Tolerances<T>,
    seed: u64,
) -> Result<RegularizedCertificate<T>> {
    check_dims(f, h)?;
    let r = model::value_range(h, tols);
    let ftol = feas_tol(h, tols);
    if !(r.lo_attained && r.lo.abs() <= ftol) {
        return Err(Error::Precondition("h must have minimum value 0 (Slater's condition fails, h <= 0 feasible)".into()));
    }
    let mut cert = regularized(&f.extended(), &h.with_slack(), eps, SignConstraint::Nonneg, tols, seed)?;
    if cert.lambda_eps < T::zero() {
        cert.lambda_eps = T::zero();
    }
    Ok(cert)
}
