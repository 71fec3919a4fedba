//! Quadratic functions `f(x) = x^T A x + 2 a^T x + c`, their lifted matrices,
//! exact value ranges, affine restrictions, and the problem types consumed by
//! the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::symlin::{self, SymMatrix};
use crate::tol::Tolerances;

/// `f(x) = x^T quad x + 2 lin^T x + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadForm<T: Real> {
    pub quad: SymMatrix<T>,
    pub lin: DVector<T>,
    pub constant: T,
}

impl<T: Real> QuadForm<T> {
    pub fn new(quad: SymMatrix<T>, lin: DVector<T>, constant: T) -> Result<Self> {
        if quad.dim() != lin.len() {
            return Err(Error::DimensionMismatch(format!(
                "quadratic part is {}x{} but linear part has length {}",
                quad.dim(),
                quad.dim(),
                lin.len()
            )));
        }
        if lin.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("linear coefficients"));
        }
        if !constant.is_finite() {
            return Err(Error::NonFinite("constant term"));
        }
        Ok(QuadForm { quad, lin, constant })
    }

    /// Convenience constructor from `f64` data; the matrix is symmetrized.
    pub fn from_parts(quad: &[&[f64]], lin: &[f64], constant: f64) -> Result<Self> {
        let q = SymMatrix::from_rows(quad)?;
        let l = DVector::from_iterator(lin.len(), lin.iter().map(|&x| T::lit(x)));
        Self::new(q, l, T::lit(constant))
    }

    /// Affine function `2 b^T x + d`.
    pub fn affine(b: DVector<T>, d: T) -> Self {
        QuadForm { quad: SymMatrix::zeros(b.len()), lin: b, constant: d }
    }

    pub fn constant_fn(n: usize, c: T) -> Self {
        QuadForm { quad: SymMatrix::zeros(n), lin: DVector::zeros(n), constant: c }
    }

    /// Homogeneous form `x^T M x`.
    pub fn homogeneous(m: SymMatrix<T>) -> Self {
        let n = m.dim();
        QuadForm { quad: m, lin: DVector::zeros(n), constant: T::zero() }
    }

    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    /// Checked evaluation.
    pub fn evaluate(&self, x: &DVector<T>) -> Result<T> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has length {} but the function has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation; `x` must have length `dim()`.
    pub fn value(&self, x: &DVector<T>) -> T {
        self.quad.quad(x) + T::lit(2.0) * self.lin.dot(x) + self.constant
    }

    /// `2 (A x + a)`.
    pub fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        (self.quad.mul_vec(x) + &self.lin) * T::lit(2.0)
    }

    /// `[[A, a], [a^T, c]]`.
    pub fn lift(&self) -> SymMatrix<T> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(self.quad.as_matrix());
        for i in 0..n {
            m[(i, n)] = self.lin[i];
            m[(n, i)] = self.lin[i];
        }
        m[(n, n)] = self.constant;
        SymMatrix::from_symmetric_unchecked(m)
    }

    /// Inverse of [`QuadForm::lift`].
    pub fn from_lift(m: &SymMatrix<T>) -> Self {
        let n = m.dim() - 1;
        let mat = m.as_matrix();
        QuadForm {
            quad: SymMatrix::from_symmetric_unchecked(mat.view((0, 0), (n, n)).into_owned()),
            lin: mat.view((0, n), (n, 1)).column(0).into_owned(),
            constant: mat[(n, n)],
        }
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, other: &QuadForm<T>, t: T) -> Self {
        QuadForm {
            quad: self.quad.add_scaled(&other.quad, t),
            lin: &self.lin + &other.lin * t,
            constant: self.constant + other.constant * t,
        }
    }

    pub fn scale(&self, t: T) -> Self {
        QuadForm { quad: self.quad.scale(t), lin: &self.lin * t, constant: self.constant * t }
    }

    /// `self - t`.
    pub fn shifted(&self, t: T) -> Self {
        QuadForm { constant: self.constant - t, ..self.clone() }
    }

    /// `||A||_inf + ||a|| + |c|`, the data scale used by tolerances.
    pub fn data_norm(&self) -> T {
        self.quad.norm_inf() + self.lin.norm() + self.constant.abs()
    }

    /// `self + eps (x^T x + 1)`.
    pub fn regularized(&self, eps: T) -> Self {
        let n = self.dim();
        self.add_scaled(&QuadForm { quad: SymMatrix::identity(n), lin: DVector::zeros(n), constant: T::one() }, eps)
    }

    /// Same function of `(x, z)` with one extra, unused variable `z`.
    pub fn extended(&self) -> Self {
        QuadForm {
            quad: self.quad.block_diag(&SymMatrix::zeros(1)),
            lin: self.lin.clone().insert_row(self.dim(), T::zero()),
            constant: self.constant,
        }
    }

    /// `h(x) + z^2` in `n + 1` variables.
    pub fn with_slack(&self) -> Self {
        QuadForm {
            quad: self.quad.block_diag(&SymMatrix::identity(1)),
            lin: self.lin.clone().insert_row(self.dim(), T::zero()),
            constant: self.constant,
        }
    }

    /// Square of an affine function `2 b^T x + d`: `(4 b b^T, 2 d b, d^2)`.
    /// Only meaningful when the quadratic part is zero.
    pub fn affine_square(&self) -> Self {
        let b = &self.lin;
        let d = self.constant;
        QuadForm {
            quad: SymMatrix::outer(b).scale(T::lit(4.0)),
            lin: b * (T::lit(2.0) * d),
            constant: d * d,
        }
    }

    /// Real roots of `t -> q(x0 + t u)`, ascending. An identically zero
    /// restriction yields `[0]`.
    pub fn line_roots(&self, x0: &DVector<T>, u: &DVector<T>) -> Vec<T> {
        let alpha = self.quad.quad(u);
        let beta = T::lit(2.0) * u.dot(&(self.quad.mul_vec(x0) + &self.lin));
        let gamma = self.value(x0);
        solve_scalar_quadratic(alpha, beta, gamma)
    }
}

/// Real roots of `alpha t^2 + beta t + gamma = 0`, using the cancellation-free
/// form of the quadratic formula.
pub fn solve_scalar_quadratic<T: Real>(alpha: T, beta: T, gamma: T) -> Vec<T> {
    let scale = alpha.abs().max(beta.abs()).max(gamma.abs());
    if scale == T::zero() {
        return vec![T::zero()];
    }
    let eps = T::machine_eps() * T::lit(16.0);
    let two = T::lit(2.0);
    if alpha.abs() <= eps * scale {
        if beta.abs() <= eps * scale {
            return vec![];
        }
        return vec![-gamma / beta];
    }
    let disc = beta * beta - T::lit(4.0) * alpha * gamma;
    if disc < T::zero() {
        if disc >= -eps * beta * beta {
            return vec![-beta / (two * alpha)];
        }
        return vec![];
    }
    let sq = disc.sqrt();
    let qv = if beta >= T::zero() { -(beta + sq) / two } else { -(beta - sq) / two };
    let mut roots = if qv == T::zero() {
        vec![T::zero()]
    } else {
        vec![qv / alpha, gamma / qv]
    };
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    roots
}

/// Image `q(R^n)`, a closed or half-open interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueRange<T: Real> {
    pub lo: T,
    pub hi: T,
    pub lo_attained: bool,
    pub hi_attained: bool,
    /// A point achieving `lo` when attained.
    pub lo_point: Option<DVector<T>>,
    /// A point achieving `hi` when attained.
    pub hi_point: Option<DVector<T>>,
}

impl<T: Real> ValueRange<T> {
    /// Whether `v` lies in the range.
    pub fn contains(&self, v: T) -> bool {
        let above = v > self.lo || (self.lo_attained && v == self.lo);
        let below = v < self.hi || (self.hi_attained && v == self.hi);
        above && below
    }

    /// Whether `v` lies in the range, allowing a slack of `tol` at attained
    /// endpoints.
    pub fn contains_approx(&self, v: T, tol: T) -> bool {
        let above = v > self.lo || (self.lo_attained && v >= self.lo - tol);
        let below = v < self.hi || (self.hi_attained && v <= self.hi + tol);
        above && below
    }

    /// `v` is strictly between the endpoints, with margin `tol`.
    pub fn interior_contains(&self, v: T, tol: T) -> bool {
        v > self.lo + tol && v < self.hi - tol
    }
}

/// Exact range of `q` over `R^n`, with witness points for attained ends.
pub fn value_range<T: Real>(q: &QuadForm<T>, tols: &Tolerances<T>) -> ValueRange<T> {
    let n = q.dim();
    if n == 0 {
        let p = Some(DVector::zeros(0));
        return ValueRange {
            lo: q.constant,
            hi: q.constant,
            lo_attained: true,
            hi_attained: true,
            lo_point: p.clone(),
            hi_point: p,
        };
    }
    let s = symlin::spectrum(&q.quad, tols.eig);
    let pinv = symlin::pinv(&q.quad, tols.eig);
    let b_in_range = symlin::in_range(&q.quad, &q.lin, tols.eig);
    let stationary = -(pinv.mul_vec(&q.lin));
    let stat_value = q.constant - q.lin.dot(&pinv.mul_vec(&q.lin));

    let mut r = ValueRange {
        lo: T::neg_infinity(),
        hi: T::infinity(),
        lo_attained: false,
        hi_attained: false,
        lo_point: None,
        hi_point: None,
    };
    if s.n_neg() == 0 && b_in_range {
        r.lo = stat_value;
        r.lo_attained = true;
        r.lo_point = Some(stationary.clone());
    }
    if s.n_pos() == 0 && b_in_range {
        r.hi = stat_value;
        r.hi_attained = true;
        r.hi_point = Some(stationary);
    }
    r
}

/// `x -> q(x0 + V y)` as a function of `y`.
pub fn restrict_to_affine<T: Real>(q: &QuadForm<T>, x0: &DVector<T>, v: &DMatrix<T>) -> Result<QuadForm<T>> {
    if x0.len() != q.dim() || v.nrows() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "restriction of a {}-dimensional function to x0 of length {} and basis with {} rows",
            q.dim(),
            x0.len(),
            v.nrows()
        )));
    }
    let quad = q.quad.congruence(v);
    let lin = v.transpose() * (q.quad.mul_vec(x0) + &q.lin);
    Ok(QuadForm { quad, lin, constant: q.value(x0) })
}

/// Result of unconstrained minimization of a quadratic.
#[derive(Debug, Clone, PartialEq)]
pub enum Unconstrained<T: Real> {
    /// `q(t * direction) -> -inf` as `t -> +inf` (from any start point).
    Unbounded { direction: DVector<T> },
    Attained { x: DVector<T>, value: T },
}

/// Global minimum of `q` over `R^n`.
pub fn minimize_unconstrained<T: Real>(q: &QuadForm<T>, tols: &Tolerances<T>) -> Unconstrained<T> {
    let n = q.dim();
    if n == 0 {
        return Unconstrained::Attained { x: DVector::zeros(0), value: q.constant };
    }
    let s = symlin::spectrum(&q.quad, tols.eig);
    if s.n_neg() > 0 {
        let v = s.vector(0);
        // Pick the sign along which the linear term does not help.
        let dir = if q.lin.dot(&v) > T::zero() { -v } else { v };
        return Unconstrained::Unbounded { direction: dir };
    }
    let pinv = symlin::pinv(&q.quad, tols.eig);
    if !symlin::in_range(&q.quad, &q.lin, tols.eig) {
        let r = -(&q.lin - q.quad.mul_vec(&pinv.mul_vec(&q.lin)));
        return Unconstrained::Unbounded { direction: r };
    }
    let x = -(pinv.mul_vec(&q.lin));
    let value = q.value(&x);
    Unconstrained::Attained { x, value }
}

/// `inf { f(x) : h(x) = 0 }`.
#[derive(Debug, Clone, PartialEq)]
pub struct Qp1eqcProblem<T: Real> {
    pub objective: QuadForm<T>,
    pub constraint: QuadForm<T>,
}

impl<T: Real> Qp1eqcProblem<T> {
    pub fn new(objective: QuadForm<T>, constraint: QuadForm<T>) -> Result<Self> {
        if objective.dim() != constraint.dim() {
            return Err(Error::DimensionMismatch(format!(
                "objective has dimension {} but constraint has {}",
                objective.dim(),
                constraint.dim()
            )));
        }
        if objective.dim() == 0 {
            return Err(Error::InvalidProblem("dimension must be at least 1".into()));
        }
        Ok(Qp1eqcProblem { objective, constraint })
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// `1 + |d| + ||b|| + ||B||_inf`, the scale of the feasibility tolerance.
    pub fn constraint_scale(&self) -> T {
        let h = &self.constraint;
        T::one() + h.constant.abs() + h.lin.norm() + h.quad.norm_inf()
    }

    pub fn feas_tol(&self, tols: &Tolerances<T>) -> T {
        tols.feas * self.constraint_scale()
    }

    /// Feasibility tolerance at `x`: [`Self::feas_tol`] grown by the size
    /// of the terms of `h(x)`, so far-away points are judged relative to
    /// the rounding in their own evaluation.
    pub fn feas_tol_at(&self, x: &DVector<T>, tols: &Tolerances<T>) -> T {
        let h = &self.constraint;
        let r = x.norm();
        self.feas_tol(tols) + tols.feas * (h.quad.norm_inf() * r * r + h.lin.norm() * r)
    }

    pub fn data_norm(&self) -> T {
        self.objective.data_norm() + self.constraint.data_norm()
    }
}

/// `inf { f(x) : l <= h(x) <= u }`.
#[derive(Debug, Clone, PartialEq)]
pub struct GtrsProblem<T: Real> {
    pub objective: QuadForm<T>,
    pub constraint: QuadForm<T>,
    pub l: T,
    pub u: T,
}

impl<T: Real> GtrsProblem<T> {
    pub fn new(objective: QuadForm<T>, constraint: QuadForm<T>, l: T, u: T) -> Result<Self> {
        if objective.dim() != constraint.dim() {
            return Err(Error::DimensionMismatch(format!(
                "objective has dimension {} but constraint has {}",
                objective.dim(),
                constraint.dim()
            )));
        }
        if !(l <= u) {
            return Err(Error::InvalidProblem("bounds must satisfy l <= u".into()));
        }
        Ok(GtrsProblem { objective, constraint, l, u })
    }

    /// The equality problem `h(x) = level`.
    pub fn boundary(&self, level: T) -> Qp1eqcProblem<T> {
        Qp1eqcProblem { objective: self.objective.clone(), constraint: self.constraint.shifted(level) }
    }
}

/// One quadratic and `p` affine maps `h_i(x) = 2 b_i^T x + d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumrangeProblem<T: Real> {
    pub f: QuadForm<T>,
    pub affines: Vec<(DVector<T>, T)>,
}

impl<T: Real> NumrangeProblem<T> {
    pub fn new(f: QuadForm<T>, affines: Vec<(DVector<T>, T)>) -> Result<Self> {
        for (i, (b, _)) in affines.iter().enumerate() {
            if b.len() != f.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "affine map {i} has length {} but f has dimension {}",
                    b.len(),
                    f.dim()
                )));
            }
        }
        Ok(NumrangeProblem { f, affines })
    }

    /// `P`, whose rows are the `b_i^T`.
    pub fn p_matrix(&self) -> DMatrix<T> {
        let n = self.f.dim();
        DMatrix::from_fn(self.affines.len(), n, |i, j| self.affines[i].0[j])
    }
}

/// Double-well reformulation: objective `z^2/2 + x^T A x / 2 - a^T x` and
/// constraint `||Q x - c||^2 / 2 - d - z = 0` in the variables `(x, z)`.
pub fn build_dwp<T: Real>(
    q: &DMatrix<T>,
    c: &DVector<T>,
    d: T,
    a_mat: &SymMatrix<T>,
    a_vec: &DVector<T>,
) -> Result<Qp1eqcProblem<T>> {
    let n = q.ncols();
    if q.nrows() != c.len() || a_mat.dim() != n || a_vec.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "Q is {}x{}, c has length {}, A is {}x{}, a has length {}",
            q.nrows(),
            n,
            c.len(),
            a_mat.dim(),
            a_mat.dim(),
            a_vec.len()
        )));
    }
    if q.iter().all(|x| *x == T::zero()) {
        return Err(Error::InvalidProblem("Q must be nonzero".into()));
    }
    let half = T::lit(0.5);
    let obj_quad = a_mat.scale(half).block_diag(&SymMatrix::from_diagonal(&[half]));
    let obj_lin = (-a_vec * half).insert_row(n, T::zero());
    let objective = QuadForm { quad: obj_quad, lin: obj_lin, constant: T::zero() };

    let qtq = SymMatrix::new(q.transpose() * q * half)?;
    let con_quad = qtq.block_diag(&SymMatrix::zeros(1));
    let con_lin = (-(q.transpose() * c) * half).insert_row(n, -half);
    let con_const = c.norm_squared() * half - d;
    let constraint = QuadForm { quad: con_quad, lin: con_lin, constant: con_const };
    Qp1eqcProblem::new(objective, constraint)
}
