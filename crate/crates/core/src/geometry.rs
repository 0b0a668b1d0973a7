//! Numerical verification of the discrete structure-preservation identity.
//!
//! The discrete flow on the constraint set satisfies
//!
//! ```text
//! (F^{(N−1)})* Ω⁺ − Ω⁻ = − d Σ_{k=0}^{N−1} (F^{(k)})* ω^{fr+ext+τ},
//! ```
//!
//! where `Ω± = −dΘ±` come from the discrete Legendre transforms with forces
//! and `ω^{fr}`, `ω^{ext}`, `ω^τ` are the discrete force and temperature
//! one-forms. With friction, external forces, and entropy directions
//! removed, the relation collapses to the symplecticity of a mechanical
//! variational integrator.
//!
//! Everything is evaluated in the `(q₀, q₁, S₀)` chart on the constraint:
//! `D₄P_d ≠ 0` makes `S₁` an implicit function of the chart coordinates, and
//! pullback commutes with the exterior derivative, so the chart computation
//! is faithful. Flow differentials use central finite differences of the
//! chart flow; exterior derivatives use central differences of one-form
//! coefficients.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::integrators::{damped_newton, Scheme, StepWindow, MAX_NEWTON_ITER, NEWTON_TOL};

/// Step factor for flow differentials (inner central differences).
pub const FLOW_DIFF_STEP: f64 = 1e-6;
/// Step factor for exterior-derivative differences (outer central
/// differences).
pub const EXTERIOR_DIFF_STEP: f64 = 1e-5;

/// A point of the `(q₀, q₁, S₀)` chart on the discrete constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub q0: DVector<f64>,
    pub q1: DVector<f64>,
    pub s0: f64,
}

impl ChartPoint {
    pub fn new(q0: DVector<f64>, q1: DVector<f64>, s0: f64) -> Result<Self> {
        if q0.len() != q1.len() || q0.is_empty() {
            return Err(Error::InvalidInput(
                "chart positions must have equal dimension n >= 1".into(),
            ));
        }
        Ok(Self { q0, q1, s0 })
    }

    pub fn scalar(x0: f64, x1: f64, s0: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(1, x0),
            DVector::from_element(1, x1),
            s0,
        )
    }

    pub fn dim(&self) -> usize {
        self.q0.len()
    }

    fn shifted(&self, eps: f64, w: &ChartVec) -> ChartPoint {
        ChartPoint {
            q0: &self.q0 + &w.dq0 * eps,
            q1: &self.q1 + &w.dq1 * eps,
            s0: self.s0 + w.ds0 * eps,
        }
    }

    fn scale(&self) -> f64 {
        1.0 + self.q0.amax().max(self.q1.amax()).max(self.s0.abs())
    }
}

/// A tangent vector in chart coordinates, dimension `2n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartVec {
    pub dq0: DVector<f64>,
    pub dq1: DVector<f64>,
    pub ds0: f64,
}

impl ChartVec {
    pub fn scalar(dx0: f64, dx1: f64, ds0: f64) -> Self {
        Self {
            dq0: DVector::from_element(1, dx0),
            dq1: DVector::from_element(1, dx1),
            ds0,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.dq0.norm_squared() + self.dq1.norm_squared() + self.ds0 * self.ds0).sqrt()
    }
}

/// A tangent 4-tuple `(δq₀, δq₁, δS₀, δS₁)` on the full window space.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowVec {
    pub dq0: DVector<f64>,
    pub dq1: DVector<f64>,
    pub ds0: f64,
    pub ds1: f64,
}

/// The `(q₀, q₁, S₀)` chart: lifts chart points onto the constraint by
/// solving `P_d = 0` for `S₁` and lifts tangents by implicit
/// differentiation.
pub struct ConstraintChart<'s, 'm> {
    scheme: &'s Scheme<'m>,
}

impl<'s, 'm> ConstraintChart<'s, 'm> {
    pub fn new(scheme: &'s Scheme<'m>) -> Self {
        Self { scheme }
    }

    /// Solves `P_d(q₀, q₁, S₀, S₁) = 0` for `S₁` starting from `S₁ = S₀`.
    pub fn lift(&self, p: &ChartPoint) -> Result<StepWindow> {
        let template = StepWindow::new(p.q0.clone(), p.q1.clone(), p.s0, p.s0)?;
        let outcome = damped_newton(
            |x| {
                let w = StepWindow {
                    s1: x[0],
                    ..template.clone()
                };
                DVector::from_element(1, self.scheme.constraint_residual(&w))
            },
            |x| {
                let w = StepWindow {
                    s1: x[0],
                    ..template.clone()
                };
                let (_, _, _, d4) = self.scheme.constraint_gradient(&w);
                DMatrix::from_element(1, 1, d4)
            },
            DVector::from_element(1, p.s0),
            NEWTON_TOL,
            MAX_NEWTON_ITER,
        )?;
        Ok(StepWindow {
            s1: outcome.x[0],
            ..template
        })
    }

    /// Lifts a chart tangent at a lifted window:
    /// `δS₁ = −(D₁P·δq₀ + D₂P·δq₁ + D₃P·δS₀)/D₄P`.
    pub fn lift_tangent(&self, window: &StepWindow, v: &ChartVec) -> Result<WindowVec> {
        let (d1, d2, d3, d4) = self.scheme.constraint_gradient(window);
        if d4 == 0.0 || !d4.is_finite() {
            return Err(Error::RegularityFailure { determinant: d4 });
        }
        let ds1 = -(d1.dot(&v.dq0) + d2.dot(&v.dq1) + d3 * v.ds0) / d4;
        Ok(WindowVec {
            dq0: v.dq0.clone(),
            dq1: v.dq1.clone(),
            ds0: v.ds0,
            ds1,
        })
    }

    /// Drops the implicit coordinate.
    pub fn project(window: &StepWindow) -> ChartPoint {
        ChartPoint {
            q0: window.q0.clone(),
            q1: window.q1.clone(),
            s0: window.s0,
        }
    }
}

/// The discrete one-forms on the window space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OneForm {
    /// `Θ⁻ = (−D₁L_d − F⁻) dq₀`.
    ThetaMinus,
    /// `Θ⁺ = (D₂L_d + F⁺) dq₁`.
    ThetaPlus,
    /// `ω^{fr} = F^{fr−} dq₀ + F^{fr+} dq₁`.
    FrictionWork,
    /// `ω^{ext} = F^{ext−} dq₀ + F^{ext+} dq₁`.
    ExternalWork,
    /// `ω^τ = −D₃L_d dS₀ − D₄L_d dS₁`.
    ThermalWork,
    /// `ω^{fr} + ω^{ext} + ω^τ`.
    TotalWork,
}

/// Evaluates a discrete one-form at `window` on the tangent `w`.
pub fn one_form_eval(form: OneForm, scheme: &Scheme, window: &StepWindow, w: &WindowVec) -> f64 {
    match form {
        OneForm::ThetaMinus => {
            (-scheme.d1_lagrangian(window) - scheme.force_minus(window)).dot(&w.dq0)
        }
        OneForm::ThetaPlus => {
            (scheme.d2_lagrangian(window) + scheme.force_plus(window)).dot(&w.dq1)
        }
        OneForm::FrictionWork => {
            scheme.friction_minus(window).dot(&w.dq0) + scheme.friction_plus(window).dot(&w.dq1)
        }
        OneForm::ExternalWork => {
            scheme.external_minus(window).dot(&w.dq0) + scheme.external_plus(window).dot(&w.dq1)
        }
        OneForm::ThermalWork => {
            -scheme.d3_lagrangian(window) * w.ds0 - scheme.d4_lagrangian(window) * w.ds1
        }
        OneForm::TotalWork => {
            one_form_eval(OneForm::FrictionWork, scheme, window, w)
                + one_form_eval(OneForm::ExternalWork, scheme, window, w)
                + one_form_eval(OneForm::ThermalWork, scheme, window, w)
        }
    }
}

/// Discrete Legendre transform with forces, minus side:
/// `(q₀, p₀) = (q₀, −D₁L_d − F⁻)`.
pub fn discrete_legendre_minus(scheme: &Scheme, window: &StepWindow) -> (DVector<f64>, DVector<f64>) {
    (
        window.q0.clone(),
        -scheme.d1_lagrangian(window) - scheme.force_minus(window),
    )
}

/// Discrete Legendre transform with forces, plus side:
/// `(q₁, p₁) = (q₁, D₂L_d + F⁺)`.
pub fn discrete_legendre_plus(scheme: &Scheme, window: &StepWindow) -> (DVector<f64>, DVector<f64>) {
    (
        window.q1.clone(),
        scheme.d2_lagrangian(window) + scheme.force_plus(window),
    )
}

/// Lifts the chart point and applies the discrete flow `n − 1` times,
/// returning all `n` windows along the orbit.
pub fn chart_flow(scheme: &Scheme, p: &ChartPoint, n: usize) -> Result<Vec<StepWindow>> {
    if n < 1 {
        return Err(Error::InvalidInput("need at least one window".into()));
    }
    let chart = ConstraintChart::new(scheme);
    let mut windows = Vec::with_capacity(n);
    windows.push(chart.lift(p)?);
    for k in 1..n {
        let next = scheme
            .step(windows.last().expect("non-empty"))
            .map_err(|e| e.at_step(k))?;
        windows.push(next);
    }
    Ok(windows)
}

/// Exterior derivative `dα(u, v)` of a chart one-form at `p`, computed as
/// `D_u[α(·)(v)] − D_v[α(·)(u)]` with `u, v` extended as constant fields
/// (their bracket vanishes in the flat chart); directional derivatives use
/// central differences.
pub fn two_form_eval<F>(alpha: F, p: &ChartPoint, u: &ChartVec, v: &ChartVec) -> Result<f64>
where
    F: Fn(&ChartPoint, &ChartVec) -> Result<f64>,
{
    let eps = EXTERIOR_DIFF_STEP * p.scale();
    let along_u =
        (alpha(&p.shifted(eps, u), v)? - alpha(&p.shifted(-eps, u), v)?) / (2.0 * eps);
    let along_v =
        (alpha(&p.shifted(eps, v), u)? - alpha(&p.shifted(-eps, v), u)?) / (2.0 * eps);
    let d = along_u - along_v;
    if !d.is_finite() {
        return Err(Error::NonFinite("exterior derivative evaluation".into()));
    }
    Ok(d)
}

/// Both sides of the discrete structure-preservation identity and their
/// difference.
#[derive(Debug, Clone)]
pub struct StructureCheckReport {
    /// Number of flow applications `N` (the identity uses `F^{(N−1)}`).
    pub flow_steps: usize,
    /// `((F^{(N−1)})* Ω⁺ − Ω⁻)(u, v)`.
    pub lhs: f64,
    /// `(−d Σ_k (F^{(k)})* ω^{fr+ext+τ})(u, v)`.
    pub rhs: f64,
    pub residual: f64,
    pub scale: f64,
}

impl StructureCheckReport {
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.scale
    }
}

/// Windows along the orbit of `p` together with the directional derivative
/// of each window along the chart direction `w` (central differences of the
/// chart flow).
fn flow_with_tangent(
    scheme: &Scheme,
    p: &ChartPoint,
    w: &ChartVec,
    n: usize,
) -> Result<(Vec<StepWindow>, Vec<WindowVec>)> {
    let eps = FLOW_DIFF_STEP * p.scale();
    let base = chart_flow(scheme, p, n)?;
    let plus = chart_flow(scheme, &p.shifted(eps, w), n)?;
    let minus = chart_flow(scheme, &p.shifted(-eps, w), n)?;
    let tangents = plus
        .iter()
        .zip(&minus)
        .map(|(a, b)| WindowVec {
            dq0: (&a.q0 - &b.q0) / (2.0 * eps),
            dq1: (&a.q1 - &b.q1) / (2.0 * eps),
            ds0: (a.s0 - b.s0) / (2.0 * eps),
            ds1: (a.s1 - b.s1) / (2.0 * eps),
        })
        .collect();
    Ok((base, tangents))
}

/// Evaluates the discrete structure-preservation identity at chart point
/// `p` for `n` flow applications on the tangent pair `(u, v)`.
pub fn structure_identity_check(
    scheme: &Scheme,
    p: &ChartPoint,
    n: usize,
    u: &ChartVec,
    v: &ChartVec,
) -> Result<StructureCheckReport> {
    if n < 1 {
        return Err(Error::InvalidInput("need n >= 1 flow applications".into()));
    }

    // Pullback of Θ⁺ under F^{(N−1)} (composed with the chart lift).
    let theta_plus_pulled = |pp: &ChartPoint, w: &ChartVec| -> Result<f64> {
        let (windows, tangents) = flow_with_tangent(scheme, pp, w, n)?;
        Ok(one_form_eval(
            OneForm::ThetaPlus,
            scheme,
            &windows[n - 1],
            &tangents[n - 1],
        ))
    };
    // Θ⁻ pulled back to the chart through the lift alone.
    let theta_minus_pulled = |pp: &ChartPoint, w: &ChartVec| -> Result<f64> {
        let (windows, tangents) = flow_with_tangent(scheme, pp, w, 1)?;
        Ok(one_form_eval(
            OneForm::ThetaMinus,
            scheme,
            &windows[0],
            &tangents[0],
        ))
    };
    // Σ_k (F^{(k)})* ω^{fr+ext+τ}.
    let work_sum_pulled = |pp: &ChartPoint, w: &ChartVec| -> Result<f64> {
        let (windows, tangents) = flow_with_tangent(scheme, pp, w, n)?;
        Ok((0..n)
            .map(|k| one_form_eval(OneForm::TotalWork, scheme, &windows[k], &tangents[k]))
            .sum())
    };

    // Ω± = −dΘ±.
    let pulled_omega_plus = -two_form_eval(theta_plus_pulled, p, u, v)?;
    let omega_minus = -two_form_eval(theta_minus_pulled, p, u, v)?;
    let lhs = pulled_omega_plus - omega_minus;
    let rhs = -two_form_eval(work_sum_pulled, p, u, v)?;

    let residual = (lhs - rhs).abs();
    let scale = lhs.abs().max(rhs.abs()).max(1.0);
    Ok(StructureCheckReport {
        flow_steps: n,
        lhs,
        rhs,
        residual,
        scale,
    })
}
