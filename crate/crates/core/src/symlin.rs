//! Dense symmetric linear algebra: spectral decompositions, pseudoinverses,
//! null and range bases, and the positive-semidefinite interval of a matrix
//! pencil.
//!
//! Functions taking a `tol` argument interpret it as the relative factor of
//! the hybrid threshold `tol * (1 + ||M||_inf)`; an eigenvalue or singular
//! value at or below that threshold counts as zero. Rank decisions also drop
//! singular values below `rank * sigma_max` (see [`Tolerances`]).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::concave::{self, Domain, SearchOptions};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tol::Tolerances;

/// Dense real symmetric matrix. Entries are finite and exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T: Real> {
    m: DMatrix<T>,
}

impl<T: Real> SymMatrix<T> {
    /// Symmetrizes `(M + M^T) / 2`. Rejects non-square or non-finite input.
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        Self::symmetrized(m).map(|(s, _)| s)
    }

    /// Like [`SymMatrix::new`], also returning the relative asymmetry
    /// `max|M_ij - M_ji| / (1 + max|M_ij|)` of the input.
    pub fn symmetrized(m: DMatrix<T>) -> Result<(Self, T)> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        let n = m.nrows();
        let mut asym = T::zero();
        let mut big = T::zero();
        for i in 0..n {
            for j in 0..n {
                asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
                big = big.max(m[(i, j)].abs());
            }
        }
        let half = T::lit(0.5);
        let sym = (&m + m.transpose()) * half;
        Ok((SymMatrix { m: sym }, asym / (T::one() + big)))
    }

    pub(crate) fn from_symmetric_unchecked(m: DMatrix<T>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        SymMatrix { m }
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix { m: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix { m: DMatrix::identity(n, n) }
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        SymMatrix { m: DMatrix::from_diagonal(&DVector::from_column_slice(d)) }
    }

    /// Row-major construction from `f64` data, symmetrizing.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("ragged or non-square rows".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| T::lit(rows[i][j])))
    }

    /// `v v^T`.
    pub fn outer(v: &DVector<T>) -> Self {
        SymMatrix { m: v * v.transpose() }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.m
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[(i, j)]
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        norm_inf(&self.m)
    }

    pub fn is_zero(&self, threshold: T) -> bool {
        self.norm_inf() <= threshold
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, other: &SymMatrix<T>, t: T) -> Self {
        SymMatrix { m: &self.m + &other.m * t }
    }

    pub fn scale(&self, t: T) -> Self {
        SymMatrix { m: &self.m * t }
    }

    /// `V^T M V`, symmetrized against rounding.
    pub fn congruence(&self, v: &DMatrix<T>) -> Self {
        let c = v.transpose() * &self.m * v;
        let half = T::lit(0.5);
        SymMatrix { m: (&c + c.transpose()) * half }
    }

    pub fn quad(&self, x: &DVector<T>) -> T {
        x.dot(&(&self.m * x))
    }

    pub fn mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        &self.m * x
    }

    /// Block diagonal `diag(self, other)`.
    pub fn block_diag(&self, other: &SymMatrix<T>) -> Self {
        let (n, k) = (self.dim(), other.dim());
        let mut m = DMatrix::zeros(n + k, n + k);
        m.view_mut((0, 0), (n, n)).copy_from(&self.m);
        m.view_mut((n, n), (k, k)).copy_from(&other.m);
        SymMatrix { m }
    }
}

pub fn norm_inf<T: Real>(m: &DMatrix<T>) -> T {
    m.row_iter()
        .map(|r| r.iter().fold(T::zero(), |acc, x| acc + x.abs()))
        .fold(T::zero(), |acc, x| acc.max(x))
}

pub fn vec_norm<T: Real>(v: &DVector<T>) -> T {
    v.norm()
}

/// Eigen-decomposition with eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T: Real> {
    pub eigenvalues: DVector<T>,
    /// Orthonormal eigenvectors, one per column, in eigenvalue order.
    pub eigenvectors: DMatrix<T>,
    /// Absolute threshold: `|lambda| <= tol` counts as zero.
    pub tol: T,
}

impl<T: Real> Spectrum<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_neg(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l < -self.tol).count()
    }

    pub fn n_pos(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > self.tol).count()
    }

    pub fn n_zero(&self) -> usize {
        self.dim() - self.n_neg() - self.n_pos()
    }

    /// Smallest eigenvalue; `+inf` for the empty matrix.
    pub fn min(&self) -> T {
        if self.dim() == 0 {
            T::infinity()
        } else {
            self.eigenvalues[0]
        }
    }

    /// Largest eigenvalue; `-inf` for the empty matrix.
    pub fn max(&self) -> T {
        if self.dim() == 0 {
            T::neg_infinity()
        } else {
            self.eigenvalues[self.dim() - 1]
        }
    }

    pub fn is_psd(&self) -> bool {
        self.n_neg() == 0
    }

    pub fn is_nsd(&self) -> bool {
        self.n_pos() == 0
    }

    pub fn is_pd(&self) -> bool {
        self.n_pos() == self.dim()
    }

    pub fn is_nd(&self) -> bool {
        self.n_neg() == self.dim()
    }

    pub fn vector(&self, i: usize) -> DVector<T> {
        self.eigenvectors.column(i).into_owned()
    }

    /// Columns whose eigenvalues count as zero.
    pub fn null_basis(&self) -> DMatrix<T> {
        let idx: Vec<usize> = (0..self.dim())
            .filter(|&i| self.eigenvalues[i].abs() <= self.tol)
            .collect();
        self.eigenvectors.select_columns(idx.iter())
    }
}

/// Spectral decomposition; `tol` is the relative sign factor.
pub fn spectrum<T: Real>(m: &SymMatrix<T>, tol: T) -> Spectrum<T> {
    let abs_tol = tol * (T::one() + m.norm_inf());
    let n = m.dim();
    if n == 0 {
        return Spectrum {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
            tol: abs_tol,
        };
    }
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let eigenvectors = eig.eigenvectors.select_columns(order.iter());
    Spectrum { eigenvalues, eigenvectors, tol: abs_tol }
}

/// Smallest eigenvalue, `+inf` for the empty matrix.
pub fn lambda_min<T: Real>(m: &SymMatrix<T>) -> T {
    spectrum(m, T::zero()).min()
}

fn cutoff<T: Real>(tol: T, norm: T, sigma_max: T) -> T {
    let abs_tol = tol * (T::one() + norm);
    let rel = T::default_tolerances().rank * sigma_max;
    abs_tol.max(rel)
}

/// Moore-Penrose pseudoinverse by spectral inversion with singular cutoff.
pub fn pinv<T: Real>(m: &SymMatrix<T>, tol: T) -> SymMatrix<T> {
    let s = spectrum(m, T::zero());
    let n = m.dim();
    let smax = s.eigenvalues.iter().fold(T::zero(), |a, x| a.max(x.abs()));
    let cut = cutoff(tol, m.norm_inf(), smax);
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let l = s.eigenvalues[i];
        if l.abs() > cut {
            let v = s.eigenvectors.column(i);
            out += v * v.transpose() * (T::one() / l);
        }
    }
    let half = T::lit(0.5);
    SymMatrix { m: (&out + out.transpose()) * half }
}

/// Orthonormal basis of the null space of a (possibly rectangular) matrix,
/// one basis vector per column. A nonsingular square matrix yields an
/// `n x 0` matrix.
pub fn null_basis<T: Real>(m: &DMatrix<T>, tol: T) -> DMatrix<T> {
    let (rows, n) = m.shape();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if rows == 0 {
        return DMatrix::identity(n, n);
    }
    let padded = if rows < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (rows, n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(T::zero(), |a, x| a.max(*x));
    let cut = cutoff(tol, norm_inf(m), smax);
    let idx: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= cut).collect();
    let mut basis = DMatrix::zeros(n, idx.len());
    for (k, &i) in idx.iter().enumerate() {
        basis.set_column(k, &v_t.row(i).transpose());
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of `span(columns of k)`
/// in `R^n`.
pub fn complement_basis<T: Real>(k: &DMatrix<T>, n: usize) -> DMatrix<T> {
    if k.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    null_basis(&k.transpose(), T::lit(1e-12))
}

/// Rank under the same cutoff as [`null_basis`].
pub fn rank<T: Real>(m: &DMatrix<T>, tol: T) -> usize {
    m.ncols() - null_basis(m, tol).ncols()
}

/// `||(I - M M^+) v|| <= tol * (1 + ||v||)`.
pub fn in_range<T: Real>(m: &SymMatrix<T>, v: &DVector<T>, tol: T) -> bool {
    // Project onto the eigenvectors that pinv discards rather than forming
    // v - M M^+ v, which amplifies rounding by the condition number.
    let s = spectrum(m, T::zero());
    let smax = s.eigenvalues.iter().fold(T::zero(), |a, x| a.max(x.abs()));
    let cut = cutoff(tol, m.norm_inf(), smax);
    let mut r2 = T::zero();
    for i in 0..m.dim() {
        if s.eigenvalues[i].abs() <= cut {
            let c = s.eigenvectors.column(i).dot(v);
            r2 += c * c;
        }
    }
    r2.sqrt() <= tol * (T::one() + v.norm())
}

/// Column-space membership for a rectangular matrix.
pub fn in_column_space<T: Real>(m: &DMatrix<T>, v: &DVector<T>, tol: T) -> bool {
    let (rows, cols) = m.shape();
    if rows == 0 {
        return true;
    }
    if cols == 0 {
        return v.norm() <= tol;
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(T::zero(), |a, x| a.max(*x));
    let cut = cutoff(tol, norm_inf(m), smax);
    let mut proj = DVector::zeros(rows);
    for i in 0..sv.len() {
        if sv[i] > cut {
            let ui = u.column(i);
            proj += ui * ui.dot(v);
        }
    }
    (v - proj).norm() <= tol * (T::one() + v.norm())
}

/// The closed set `{mu : A + mu B is PSD}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PencilInterval<T> {
    /// `+inf` when empty.
    pub lo: T,
    /// `-inf` when empty.
    pub hi: T,
    pub empty: bool,
    pub lo_attained: bool,
    pub hi_attained: bool,
    /// Maximizer of `lambda_min(A + mu B)` after removing the common null
    /// space of `A` and `B`; an interior point when the interval has one.
    pub peak: T,
    /// The maximum itself.
    pub peak_value: T,
}

impl<T: Real> PencilInterval<T> {
    fn empty(peak: T, peak_value: T) -> Self {
        PencilInterval {
            lo: T::infinity(),
            hi: T::neg_infinity(),
            empty: true,
            lo_attained: false,
            hi_attained: false,
            peak,
            peak_value,
        }
    }

    pub fn contains(&self, mu: T) -> bool {
        !self.empty && mu >= self.lo && mu <= self.hi
    }

    /// `hi - lo <= rel * (1 + |lo|)`.
    pub fn is_singleton(&self, rel: T) -> bool {
        !self.empty && !self.lo.is_inf() && !self.hi.is_inf() && self.hi - self.lo <= rel * (T::one() + self.lo.abs())
    }

    pub fn width(&self) -> T {
        if self.empty {
            T::zero()
        } else {
            self.hi - self.lo
        }
    }
}

/// Result of [`max_lambda_min_affine`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaMax<T> {
    pub arg: T,
    pub value: T,
    pub hit_cap: bool,
}

/// Maximizes the concave `t -> lambda_min(m0 + t m1)` over `domain`.
pub fn max_lambda_min_affine<T: Real>(
    m0: &SymMatrix<T>,
    m1: &SymMatrix<T>,
    domain: Domain<T>,
    tols: &Tolerances<T>,
) -> LambdaMax<T> {
    max_lambda_min_affine_from(m0, m1, domain, T::zero(), T::one(), tols)
}

/// [`max_lambda_min_affine`] with an explicit start point and initial
/// bracketing step.
pub fn max_lambda_min_affine_from<T: Real>(
    m0: &SymMatrix<T>,
    m1: &SymMatrix<T>,
    domain: Domain<T>,
    start: T,
    step: T,
    tols: &Tolerances<T>,
) -> LambdaMax<T> {
    let g = |t: T| lambda_min(&m0.add_scaled(m1, t));
    if m1.norm_inf() == T::zero() {
        let t = domain.clamp(T::zero());
        return LambdaMax { arg: t, value: g(t), hit_cap: false };
    }
    let opts = SearchOptions::new(step, tols.mu_cap, tols.arg);
    let m = concave::maximize(g, domain, start, opts);
    let mut best = LambdaMax { arg: m.arg, value: m.value, hit_cap: m.hit_cap };
    if m.hit_cap {
        return best;
    }

    // Value comparisons stall once differences reach rounding level; the
    // supergradient v^T M1 v of the bottom eigenvector keeps its sign there.
    let slope = |t: T| {
        let s = spectrum(&m0.add_scaled(m1, t), T::zero());
        let v = s.vector(0);
        m1.quad(&v)
    };
    // Flat peaks leave the value-based argmax well off the true one, so the
    // bracket widens until the slopes straddle it.
    let mut bracket = None;
    for width in [1e-6, 1e-4, 1e-2] {
        let delta = T::lit(width) * (T::one() + m.arg.abs());
        let (a, b) = (domain.clamp(m.arg - delta), domain.clamp(m.arg + delta));
        if slope(a) > T::zero() && slope(b) < T::zero() {
            bracket = Some((a, b));
            break;
        }
    }
    if let Some((mut a, mut b)) = bracket {
        let eps = T::machine_eps() * T::lit(4.0);
        for _ in 0..200 {
            let mid = (a + b) / T::lit(2.0);
            if b - a <= eps * (T::one() + mid.abs()) {
                break;
            }
            let s = slope(mid);
            if s > T::zero() {
                a = mid;
            } else if s < T::zero() {
                b = mid;
            } else {
                a = mid;
                b = mid;
            }
        }
        let t = (a + b) / T::lit(2.0);
        let v = g(t);
        // The bisected point is the better argmax even when rounding makes
        // its value look marginally lower.
        let noise = T::lit(100.0) * T::machine_eps() * (m0.norm_inf() + t.abs() * m1.norm_inf());
        if v >= best.value - noise {
            best = LambdaMax { arg: t, value: v, hit_cap: false };
        }
    }
    best
}

/// Handles a maximum of `lambda_min(m0 + t m1)` pinned at the search cap.
///
/// A cap hit with `lambda_min` still near zero is indistinguishable from
/// rounding and yields `None`. A clearly positive value means the
/// superlevel set is unbounded; the point nearest `start` where
/// `lambda_min` reaches half that value is returned instead of the cap.
pub fn retreat_from_cap<T: Real>(m0: &SymMatrix<T>, m1: &SymMatrix<T>, r: &LambdaMax<T>, start: T, tols: &Tolerances<T>) -> Option<T> {
    // Rounding in lambda_min at the cap is about machine epsilon times the
    // matrix norm; values far above that are genuine.
    let rounding = T::lit(1e3) * T::machine_eps() * r.arg.abs() * m1.norm_inf();
    let margin = tols.sign_tol(m0.norm_inf()) + rounding;
    if !(r.value > margin) {
        return None;
    }
    let target = r.value / T::lit(2.0);
    let g = |t: T| lambda_min(&m0.add_scaled(m1, t));
    if g(start) >= target {
        return Some(start);
    }
    let (mut a, mut b) = (start, r.arg);
    for _ in 0..200 {
        let mid = (a + b) / T::lit(2.0);
        if g(mid) >= target {
            b = mid;
        } else {
            a = mid;
        }
        if (b - a).abs() <= tols.arg * (T::one() + b.abs()) {
            break;
        }
    }
    Some(b)
}

/// Exact PSD-feasibility of `A + mu B` for semidefinite `B`; `None` when
/// `B` is indefinite.
///
/// With `Z` a basis of `N(B)`, some `mu` makes `A + mu B` PSD iff
/// `W = Z^T A Z` is PSD and every null vector `w` of `W` has `A Z w = 0`.
/// This settles pencils that only become PSD in the limit `|mu| -> inf`,
/// where eigenvalue tests at large `mu` drown in rounding.
pub fn semidefinite_pencil_feasible<T: Real>(a: &SymMatrix<T>, b: &SymMatrix<T>, tols: &Tolerances<T>) -> Option<bool> {
    let sb = spectrum(b, tols.eig);
    if sb.n_neg() > 0 && sb.n_pos() > 0 {
        return None;
    }
    let z = sb.null_basis();
    let w = a.congruence(&z);
    let sw = spectrum(&w, tols.eig);
    if !sw.is_psd() {
        return Some(false);
    }
    let nw = null_basis(w.as_matrix(), tols.eig);
    let leak = (a.as_matrix() * &z * nw).amax();
    Some(leak <= T::lit(1e-6) * (T::one() + a.norm_inf()))
}

/// Positive-semidefinite interval of the pencil `A + mu B`.
///
/// The common null space of `A` and `B` is projected out first, so on the
/// remaining coordinates interior points of a nondegenerate interval are
/// positive definite and endpoints are sign changes of `lambda_min`.
pub fn pencil_interval<T: Real>(
    a: &SymMatrix<T>,
    b: &SymMatrix<T>,
    tols: &Tolerances<T>,
) -> Result<PencilInterval<T>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "pencil matrices are {}x{} and {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    let n = a.dim();
    let (na, nb) = (a.norm_inf(), b.norm_inf());
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(a.as_matrix());
    stacked.view_mut((n, 0), (n, n)).copy_from(b.as_matrix());
    let common = null_basis(&stacked, tols.eig);
    let u = complement_basis(&common, n);
    if u.ncols() == 0 {
        return Ok(PencilInterval {
            lo: T::neg_infinity(),
            hi: T::infinity(),
            empty: false,
            lo_attained: false,
            hi_attained: false,
            peak: T::zero(),
            peak_value: T::zero(),
        });
    }
    let ar = a.congruence(&u);
    let br = b.congruence(&u);
    let tol_at = |mu: T| tols.sign_tol(na + mu.abs() * nb);
    let g = |mu: T| lambda_min(&ar.add_scaled(&br, mu));

    let peak = max_lambda_min_affine(&ar, &br, Domain::real_line(), tols);
    if semidefinite_pencil_feasible(&ar, &br, tols) == Some(false) {
        return Ok(PencilInterval::empty(peak.arg, peak.value));
    }
    if peak.value < -tol_at(peak.arg) {
        return Ok(PencilInterval::empty(peak.arg, peak.value));
    }
    if peak.value <= tol_at(peak.arg) {
        return Ok(PencilInterval {
            lo: peak.arg,
            hi: peak.arg,
            empty: false,
            lo_attained: true,
            hi_attained: true,
            peak: peak.arg,
            peak_value: peak.value,
        });
    }

    let edge = |dir: T| -> T {
        let cap = tols.mu_cap;
        let mut inside = peak.arg;
        let mut step = T::one();
        let outside;
        loop {
            let t = peak.arg + dir * step;
            if t.abs() >= cap {
                let tc = dir * cap.max(peak.arg.abs() + T::one());
                if g(tc) >= T::zero() {
                    return tc * T::infinity();
                }
                outside = tc;
                break;
            }
            if g(t) >= T::zero() {
                inside = t;
                step *= T::lit(2.0);
            } else {
                outside = t;
                break;
            }
        }
        let mut out = outside;
        for _ in 0..400 {
            if (out - inside).abs() <= tols.endpoint * (T::one() + inside.abs()) {
                break;
            }
            let mid = (inside + out) / T::lit(2.0);
            if g(mid) >= T::zero() {
                inside = mid;
            } else {
                out = mid;
            }
        }
        inside
    };
    let hi = edge(T::one());
    let lo = edge(-T::one());
    let attained = |mu: T| {
        !mu.is_inf() && lambda_min(&a.add_scaled(b, mu)).abs() <= T::lit(10.0) * tol_at(mu)
    };
    Ok(PencilInterval {
        lo,
        hi,
        empty: false,
        lo_attained: attained(lo),
        hi_attained: attained(hi),
        peak: peak.arg,
        peak_value: peak.value,
    })
}
