//! The four sufficient conditions for the S-lemma with equality found in
//! earlier literature:
//!
//! 1. `h` is strictly convex or strictly concave.
//! 2. `A >= eta B` for some real `eta`.
//! 3. `h` is homogeneous.
//! 4. `h(0) = 0` and some `zeta` with `h(zeta) = 0` has
//!    `x^T B x = 0 => (B zeta + b)^T x = 0`.
//!
//! Condition 4 is evaluated in closed form. For semidefinite `B`,
//! `x^T B x = 0` iff `B x = 0`, so the implication reads `b in R(B)` at
//! `zeta = 0`. For indefinite `B` it forces `B zeta + b = 0`, which is
//! solvable on `{h = 0}` iff `b in R(B)` and `d = b^T B^+ b`.

use crate::concave::Domain;
use crate::error::{Error, Result};
use crate::model::QuadForm;
use crate::scalar::Real;
use crate::symlin;
use crate::tol::Tolerances;

/// Evaluates S-Condition `k` for `(f, h)`.
pub fn scondition<T: Real>(k: u8, f: &QuadForm<T>, h: &QuadForm<T>, tols: &Tolerances<T>) -> Result<bool> {
    if f.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!("f has dimension {} but h has {}", f.dim(), h.dim())));
    }
    let b = &h.quad;
    let scale = T::one() + b.norm_inf() + h.lin.norm() + h.constant.abs();
    let zero = |x: T| x.abs() <= tols.feas * scale;
    Ok(match k {
        1 => {
            let s = symlin::spectrum(b, tols.eig);
            s.is_pd() || s.is_nd()
        }
        2 => {
            let a = &f.quad;
            // Semidefinite B is settled exactly; indefinite B sends
            // lambda_min to -inf in both directions, so the search is bounded.
            if let Some(feasible) = symlin::semidefinite_pencil_feasible(a, b, tols) {
                return Ok(feasible);
            }
            let r = symlin::max_lambda_min_affine(a, &b.scale(-T::one()), Domain::real_line(), tols);
            !r.hit_cap && r.value >= -tols.sign_tol(a.norm_inf() + r.arg.abs() * b.norm_inf())
        }
        3 => zero(h.lin.norm()) && zero(h.constant),
        4 => {
            if !zero(h.constant) || !symlin::in_range(b, &h.lin, tols.eig) {
                return Ok(false);
            }
            let s = symlin::spectrum(b, tols.eig);
            if s.is_psd() || s.is_nsd() {
                true
            } else {
                let bpb = h.lin.dot(&symlin::pinv(b, tols.eig).mul_vec(&h.lin));
                zero(bpb)
            }
        }
        _ => return Err(Error::InvalidProblem(format!("S-Condition index must be 1..=4, got {k}"))),
    })
}

/// All four conditions, in order.
pub fn all_sconditions<T: Real>(f: &QuadForm<T>, h: &QuadForm<T>, tols: &Tolerances<T>) -> Result<[bool; 4]> {
    Ok([
        scondition(1, f, h, tols)?,
        scondition(2, f, h, tols)?,
        scondition(3, f, h, tols)?,
        scondition(4, f, h, tols)?,
    ])
}
