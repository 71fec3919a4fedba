//! Convexity of the joint numerical range
//! `S = { (f(x), h_1(x), ..., h_p(x)) : x in R^n }` for a quadratic `f` and
//! affine `h_i(x) = 2 b_i^T x + d_i`.
//!
//! With `P = [b_1 ... b_p]^T`, `V` a basis of `N(P)` and `W` a basis of
//! `N(V^T A)`, the set is nonconvex exactly when one of two cases occurs:
//!
//! ```text
//! (a)  V^T A V >= 0,  V^T a in R(V^T A),  W^T A W has a negative eigenvalue
//! (b)  V^T A V <= 0,  V^T a in R(V^T A),  W^T A W has a positive eigenvalue
//! ```
//!
//! An empty `V` (full-rank `P`) makes `V^T A V` the empty matrix, which is
//! both PSD and NSD, and the range condition holds trivially.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::concave::{self, Domain, SearchOptions};
use crate::error::{Error, Result};
use crate::model::{NumrangeProblem, QuadForm};
use crate::scalar::Real;
use crate::symlin;
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConvexityCase {
    None,
    A,
    B,
}

impl ConvexityCase {
    pub fn tag(self) -> &'static str {
        match self {
            ConvexityCase::None => "none",
            ConvexityCase::A => "a",
            ConvexityCase::B => "b",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityVerdict<T: Real> {
    pub convex: bool,
    pub case: ConvexityCase,
    /// `rank(P)`.
    pub r: usize,
    pub v: DMatrix<T>,
    pub w: DMatrix<T>,
    /// Eigenvalues of `V^T A V`, ascending.
    pub vav_eigenvalues: DVector<T>,
    /// Eigenvalues of `W^T A W`, ascending.
    pub waw_eigenvalues: DVector<T>,
    /// Whether `V^T a` lies in `R(V^T A)`.
    pub va_in_range: bool,
    /// The eigenvalue of `W^T A W` that triggered a nonconvex case.
    pub witness_eig: Option<T>,
    /// Some decisive eigenvalue sits within two orders of magnitude of the
    /// sign threshold, so the verdict is tolerance-sensitive.
    pub boundary: bool,
}

fn near_threshold<T: Real>(eigs: &DVector<T>, tol: T) -> bool {
    let hundred = T::lit(100.0);
    eigs.iter().any(|l| l.abs() > tol / hundred && l.abs() <= tol * hundred)
}

/// Decides convexity of the joint numerical range.
pub fn classify_convexity<T: Real>(p: &NumrangeProblem<T>, tols: &Tolerances<T>) -> Result<ConvexityVerdict<T>> {
    if p.affines.is_empty() {
        return Err(Error::InvalidProblem("at least one affine map is required".into()));
    }
    let f = &p.f;
    let pm = p.p_matrix();
    let r = symlin::rank(&pm, tols.eig);
    let v = symlin::null_basis(&pm, tols.eig);
    let vta = v.transpose() * f.quad.as_matrix();
    let w = symlin::null_basis(&vta, tols.eig);

    let vav = f.quad.congruence(&v);
    let waw = f.quad.congruence(&w);
    let sv = symlin::spectrum(&vav, tols.eig);
    let sw = symlin::spectrum(&waw, tols.eig);
    let va = v.transpose() * &f.lin;
    let va_in_range = v.ncols() == 0 || symlin::in_column_space(&vta, &va, tols.eig);

    let mut case = ConvexityCase::None;
    let mut witness_eig = None;
    if va_in_range {
        if sv.is_psd() && sw.n_neg() > 0 {
            case = ConvexityCase::A;
            witness_eig = Some(sw.min());
        } else if sv.is_nsd() && sw.n_pos() > 0 {
            case = ConvexityCase::B;
            witness_eig = Some(sw.max());
        }
    }
    let boundary = near_threshold(&sv.eigenvalues, sv.tol) || near_threshold(&sw.eigenvalues, sw.tol);
    Ok(ConvexityVerdict {
        convex: case == ConvexityCase::None,
        case,
        r,
        v,
        w,
        vav_eigenvalues: sv.eigenvalues,
        waw_eigenvalues: sw.eigenvalues,
        va_in_range,
        witness_eig,
        boundary,
    })
}

/// Searches `(mu_1, mu_2)` on the unit circle with `mu_1 A + mu_2 B`
/// positive definite, which makes `{(f(x), h(x))}` closed and convex.
pub fn polyak_sufficient<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, tols: &Tolerances<T>) -> Result<Option<(T, T)>> {
    let n = f.dim();
    if n < 2 {
        return Err(Error::Precondition("dimension must be at least 2".into()));
    }
    if h.dim() != n {
        return Err(Error::DimensionMismatch(format!("f has dimension {n} but h has {}", h.dim())));
    }
    let (a, b) = (&f.quad, &h.quad);
    let g = |theta: T| symlin::lambda_min(&a.scale(theta.cos()).add_scaled(b, theta.sin()));

    const SEEDS: usize = 64;
    let step = T::lit(2.0 * PI / SEEDS as f64);
    let grid: Vec<T> = (0..SEEDS).map(|i| g(step * T::lit(i as f64))).collect();
    let mut best = (T::zero(), T::neg_infinity());
    for i in 0..SEEDS {
        let prev = grid[(i + SEEDS - 1) % SEEDS];
        let next = grid[(i + 1) % SEEDS];
        if grid[i] < prev || grid[i] < next {
            continue;
        }
        // lambda_min is concave along each arc on which the bottom eigenvalue
        // stays simple; a local grid maximum brackets such an arc.
        let center = step * T::lit(i as f64);
        let dom = Domain::new(center - step, center + step);
        let opts = SearchOptions::new(step / T::lit(4.0), T::lit(10.0), tols.arg);
        let m = concave::maximize(g, dom, center, opts);
        if m.value > best.1 {
            best = (m.arg, m.value);
        }
    }
    let scale = a.norm_inf() + b.norm_inf();
    let (theta, value) = best;
    Ok((value >= tols.sign_tol(scale)).then(|| (theta.cos(), theta.sin())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrthantCase {
    /// `S` contains a curve along which both coordinates tend to `-inf`.
    I,
    /// `A = alpha b_1 b_1^T` with `alpha > 0`.
    Ii,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthantVerdict<T: Real> {
    pub case: OrthantCase,
    /// Direction `z` of the curve `t -> (f(t z), h_1(t z))` in case (i).
    pub escape_direction: Option<DVector<T>>,
    pub alpha: Option<T>,
}

/// For nonconvex `S` with a single affine map, decides which of the two
/// ways `S + R^2_+` arises.
pub fn classify_orthant_p1<T: Real>(f: &QuadForm<T>, b1: &DVector<T>, d1: T, tols: &Tolerances<T>) -> Result<OrthantVerdict<T>> {
    let p = NumrangeProblem::new(f.clone(), vec![(b1.clone(), d1)])?;
    let cv = classify_convexity(&p, tols)?;
    if cv.convex {
        return Err(Error::HypothesisViolation("the numerical range is convex".into()));
    }
    let a = &f.quad;
    let sa = symlin::spectrum(a, tols.eig);
    let vav_zero = cv.vav_eigenvalues.iter().all(|l| l.abs() <= sa.tol);
    if sa.is_psd() && vav_zero {
        let bb = b1.norm_squared();
        let alpha = a.quad(b1) / (bb * bb);
        let residual = (a.as_matrix() - b1 * b1.transpose() * alpha).amax();
        if alpha > T::zero() && residual <= sa.tol {
            return Ok(OrthantVerdict { case: OrthantCase::Ii, escape_direction: None, alpha: Some(alpha) });
        }
    }

    // Negative-curvature candidates: eigenvectors of A, then V u for a
    // negative direction u of V^T A V.
    let mut candidates: Vec<DVector<T>> = (0..sa.dim())
        .filter(|&i| sa.eigenvalues[i] < -sa.tol)
        .map(|i| sa.vector(i))
        .collect();
    if cv.v.ncols() > 0 {
        let sv = symlin::spectrum(&a.congruence(&cv.v), tols.eig);
        if sv.min() < -sv.tol {
            candidates.push(&cv.v * sv.vector(0));
        }
    }
    let down = -b1 / b1.norm();
    for d in candidates {
        if let Some(z) = descend_both(f, b1, d1, &d, &down, &sa.eigenvectors, sa.tol) {
            return Ok(OrthantVerdict { case: OrthantCase::I, escape_direction: Some(z), alpha: None });
        }
    }
    Err(Error::HypothesisViolation("no escape direction found".into()))
}

/// Turns a negative-curvature direction `d` into one with `b_1^T z < 0`,
/// mixing in descent directions when `d` is orthogonal to `b_1`, then
/// scales it until the curve decreases visibly on `t in {10, 100, 1000}`.
fn descend_both<T: Real>(
    f: &QuadForm<T>,
    b1: &DVector<T>,
    d1: T,
    d: &DVector<T>,
    down: &DVector<T>,
    eigvecs: &DMatrix<T>,
    tol: T,
) -> Option<DVector<T>> {
    let a = &f.quad;
    let slope_tol = T::lit(1e-8) * b1.norm() * d.norm();
    let mut mixes: Vec<DVector<T>> = vec![down.clone()];
    for c in eigvecs.column_iter() {
        let c = c.into_owned();
        let s = b1.dot(&c);
        if s.abs() > slope_tol {
            mixes.push(if s > T::zero() { -c } else { c });
        }
    }
    let mut zs = Vec::new();
    let s = b1.dot(d);
    if s < -slope_tol {
        zs.push(d.clone());
    } else if s > slope_tol {
        zs.push(-d);
    } else {
        for m in &mixes {
            let mut beta = T::one();
            for _ in 0..60 {
                let z = d + m * beta;
                if a.quad(&z) < -tol * z.norm_squared() && b1.dot(&z) < T::zero() {
                    zs.push(z);
                    break;
                }
                beta /= T::lit(2.0);
            }
        }
    }
    let h = QuadForm::affine(b1.clone(), d1);
    for z in zs {
        let mut scale = T::one();
        for _ in 0..200 {
            let zz = &z * scale;
            if escapes(f, &h, &zz) {
                return Some(zz);
            }
            scale *= T::lit(2.0);
        }
    }
    None
}

/// `t -> (f(t z), h(t z))` strictly decreases on `t = 10, 100, 1000` and
/// ends below `-1000` in both coordinates.
pub fn escapes<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, z: &DVector<T>) -> bool {
    let ts = [10.0, 100.0, 1000.0].map(T::lit);
    let u = ts.map(|t| f.value(&(z * t)));
    let v = ts.map(|t| h.value(&(z * t)));
    let limit = T::lit(-1000.0);
    u[0] > u[1] && u[1] > u[2] && v[0] > v[1] && v[1] > v[2] && u[2] < limit && v[2] < limit
}
