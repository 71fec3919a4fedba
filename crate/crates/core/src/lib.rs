//! Decision procedures for the S-lemma with equality and its variants,
//! global solvers for quadratic programs with one equality or interval
//! constraint, and convexity classification of joint numerical ranges.
//!
//! Every routine is generic over the scalar type (`f32` or `f64`) through
//! [`Real`]. The `*64` and `*32` aliases below fix the precision.
//!
//! Quadratic functions follow the convention
//! `f(x) = x^T A x + 2 a^T x + c`; see [`QuadForm`].

// Negated comparisons such as `!(x > 0)` deliberately treat NaN as failing.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concave;
pub mod error;
pub mod gtrs;
pub mod model;
pub mod numrange;
pub mod oracle;
pub mod qp1eqc;
pub mod scalar;
pub mod scond;
pub mod slemma;
pub mod symlin;
pub mod tol;

pub use error::{Error, Result};
pub use gtrs::{GtrsOutcome, IntervalSLemmaVerdict, Source};
pub use model::{GtrsProblem, NumrangeProblem, Qp1eqcProblem, QuadForm, ValueRange};
pub use numrange::{ConvexityCase, ConvexityVerdict, OrthantCase, OrthantVerdict};
pub use qp1eqc::{Route, SolveOutcome, Status, DEFAULT_SEED};
pub use scalar::Real;
pub use slemma::{Branch, SLemmaVerdict};
pub use symlin::{PencilInterval, Spectrum, SymMatrix};
pub use tol::Tolerances;

pub type SymMatrix64 = SymMatrix<f64>;
pub type SymMatrix32 = SymMatrix<f32>;
pub type Tolerances64 = Tolerances<f64>;
pub type Tolerances32 = Tolerances<f32>;
pub type QuadForm64 = QuadForm<f64>;
pub type QuadForm32 = QuadForm<f32>;
pub type Qp1eqcProblem64 = Qp1eqcProblem<f64>;
pub type Qp1eqcProblem32 = Qp1eqcProblem<f32>;
pub type GtrsProblem64 = GtrsProblem<f64>;
pub type GtrsProblem32 = GtrsProblem<f32>;
pub type NumrangeProblem64 = NumrangeProblem<f64>;
pub type NumrangeProblem32 = NumrangeProblem<f32>;
pub type SLemmaVerdict64 = SLemmaVerdict<f64>;
pub type SolveOutcome64 = SolveOutcome<f64>;
pub type GtrsOutcome64 = GtrsOutcome<f64>;
pub type ConvexityVerdict64 = ConvexityVerdict<f64>;
