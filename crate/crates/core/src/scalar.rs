//! Scalar abstraction shared by every module.
//!
//! All numerics are written against [`Real`], which layers the handful of
//! IEEE-754 facts nalgebra's `RealField` does not expose (infinities,
//! literal conversion, machine epsilon) on top of it. `f32` and `f64` are the
//! supported instantiations.

use nalgebra::RealField;
use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::tol::Tolerances;

pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Default {
    /// Converts an `f64` literal. Values outside the target range saturate.
    fn lit(x: f64) -> Self;
    fn infinity() -> Self;
    fn neg_infinity() -> Self;
    fn machine_eps() -> Self;
    fn as_f64(self) -> f64;
    /// Default tolerance policy for this precision.
    fn default_tolerances() -> Tolerances<Self>;

    fn is_inf(self) -> bool {
        self.as_f64().is_infinite()
    }
}

impl Real for f64 {
    fn lit(x: f64) -> Self {
        x
    }
    fn infinity() -> Self {
        Float::infinity()
    }
    fn neg_infinity() -> Self {
        Float::neg_infinity()
    }
    fn machine_eps() -> Self {
        Float::epsilon()
    }
    fn as_f64(self) -> f64 {
        self
    }
    fn default_tolerances() -> Tolerances<Self> {
        Tolerances {
            eig: 1e-9,
            rank: 1e-10,
            mu_cap: 1e8,
            zero_matrix: 1e-12,
            feas: 1e-7,
            singleton: 1e-7,
            arg: 1e-10,
            endpoint: 1e-10,
        }
    }
}

impl Real for f32 {
    fn lit(x: f64) -> Self {
        x as f32
    }
    fn infinity() -> Self {
        Float::infinity()
    }
    fn neg_infinity() -> Self {
        Float::neg_infinity()
    }
    fn machine_eps() -> Self {
        Float::epsilon()
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn default_tolerances() -> Tolerances<Self> {
        Tolerances {
            eig: 2e-5,
            rank: 1e-6,
            mu_cap: 1e5,
            zero_matrix: 1e-6,
            feas: 1e-3,
            singleton: 1e-3,
            arg: 1e-5,
            endpoint: 1e-5,
        }
    }
}
