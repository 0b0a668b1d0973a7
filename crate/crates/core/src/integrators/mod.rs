//! Discrete variational schemes and the implicit stepper.
//!
//! A scheme packages a discrete Lagrangian `L_d(q₀, q₁, S₀, S₁)`, discrete
//! friction/external forces `F^±`, and the discrete phenomenological
//! constraint residual `P_d`, all with analytic partial derivatives. The
//! stepper solves the discrete evolution equations
//!
//! ```text
//! D₁L_d(w_{k}) + D₂L_d(w_{k−1}) + F⁻(w_k) + F⁺(w_{k−1}) = 0,
//! P_d(w_k) = 0,
//! ```
//!
//! for the next window `w_k = (q_k, q_{k+1}, S_k, S_{k+1})`, using the
//! regularity matrix (the implicit-function Jacobian) as the Newton
//! Jacobian.

mod regularity;
mod scheme;
mod stepper;

pub use regularity::{regularity_matrix, RegularityReport, REGULARITY_DET_TOL};
pub use scheme::{Scheme, SchemeKind, StepWindow};
pub use stepper::{damped_newton, NewtonOutcome, MAX_NEWTON_ITER, NEWTON_TOL};
