//! Regularity matrix of the discrete evolution equations.
//!
//! The implicit function theorem applied to the stepping system yields the
//! `(n+1)×(n+1)` matrix
//!
//! ```text
//! [ D₂D₁L_d + D₂F⁻   D₄D₁L_d + D₄F⁻ ]
//! [ D₂P_d            D₄P_d          ]
//! ```
//!
//! whose invertibility guarantees a well-defined discrete flow on the
//! constraint. Equivalently, `D₄P_d ≠ 0` and the Schur complement
//! `(D₂D₁L_d + D₂F⁻) − (D₄D₁L_d + D₄F⁻)(D₂P_d)/D₄P_d` must be invertible.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::integrators::scheme::{Scheme, SchemeKind, StepWindow};
use crate::models::SystemModel;

/// A determinant is treated as numerically zero below this fraction of the
/// matrix scale (product of row max-norms).
pub const REGULARITY_DET_TOL: f64 = 1e-12;

/// Regularity diagnostics at one window.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub window: StepWindow,
    /// The `(n+1)×(n+1)` Jacobian of the step residual.
    pub matrix: DMatrix<f64>,
    pub determinant: f64,
    /// `|det| > tol · scale(matrix)` with scale the product of row max-norms.
    pub invertible: bool,
    /// `D₄P_d` at the window.
    pub d4_constraint: f64,
    /// Schur complement with respect to the constraint row (`n×n`); entries
    /// are NaN when `D₄P_d = 0`.
    pub schur: DMatrix<f64>,
}

impl<'m> Scheme<'m> {
    /// Assembles the regularity matrix and its invertibility diagnostics at
    /// `window`.
    pub fn regularity_report(&self, window: &StepWindow) -> RegularityReport {
        let n = self.dim();
        let matrix = self.step_jacobian(window);
        let determinant = matrix.clone().lu().determinant();
        let scale: f64 = matrix.row_iter().map(|row| row.amax()).product();
        let invertible = determinant.abs() > REGULARITY_DET_TOL * scale.max(f64::MIN_POSITIVE);

        let top_left = matrix.view((0, 0), (n, n)).into_owned();
        let top_right: DVector<f64> = matrix.view((0, n), (n, 1)).column(0).into_owned();
        let bottom_left: DVector<f64> =
            matrix.view((n, 0), (1, n)).transpose().column(0).into_owned();
        let d4_constraint = matrix[(n, n)];
        let schur = if d4_constraint != 0.0 {
            &top_left - (&top_right * bottom_left.transpose()) / d4_constraint
        } else {
            DMatrix::from_element(n, n, f64::NAN)
        };

        RegularityReport {
            window: window.clone(),
            matrix,
            determinant,
            invertible,
            d4_constraint,
            schur,
        }
    }
}

/// Builds the scheme and reports its regularity matrix at `window`.
pub fn regularity_matrix(
    kind: SchemeKind,
    model: &SystemModel,
    h: f64,
    window: &StepWindow,
) -> Result<RegularityReport> {
    Ok(Scheme::new(kind, model, h)?.regularity_report(window))
}
