//! Tolerance policy.
//!
//! Every sign decision on an eigenvalue goes through [`Tolerances::sign_tol`],
//! a hybrid absolute/relative threshold `eig * (1 + ||M||_inf)`. Rank
//! decisions additionally cut singular values below `rank * sigma_max`.

use serde::Serialize;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances<T> {
    /// Relative factor of the eigenvalue sign threshold.
    pub eig: T,
    /// Relative singular-value cutoff for pseudoinverses and null spaces.
    pub rank: T,
    /// Pencil endpoints beyond this magnitude are reported as infinite.
    pub mu_cap: T,
    /// `B = 0` when `||B||_inf <= zero_matrix * (1 + ||A||_inf)`.
    pub zero_matrix: T,
    /// Relative factor of the constraint feasibility threshold.
    pub feas: T,
    /// Pencil intervals narrower than `singleton * (1 + |lo|)` are points.
    pub singleton: T,
    /// Argument tolerance of the 1-D maximizers.
    pub arg: T,
    /// Relative width at which pencil endpoint bisection stops.
    pub endpoint: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        T::default_tolerances()
    }
}

impl<T: Real> Tolerances<T> {
    /// Same policy with the eigenvalue factor replaced (the CLI `--tol` flag).
    pub fn with_eig(mut self, eig: T) -> Self {
        self.eig = eig;
        self
    }

    pub fn sign_tol(&self, norm: T) -> T {
        self.eig * (T::one() + norm)
    }

    pub fn rank_cut(&self, sigma_max: T) -> T {
        self.rank * sigma_max
    }
}
