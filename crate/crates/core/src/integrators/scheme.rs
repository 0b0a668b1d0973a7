//! Scheme construction: discrete Lagrangians, discrete forces, and the
//! discrete phenomenological constraint, with analytic partials.
//!
//! All bundled schemes sample the continuous data through affine
//! finite-difference maps
//!
//! ```text
//! (q₀, q₁, S₀, S₁) ↦ (q_α, v_d, S_α),
//! q_α = (1−α)q₀ + αq₁,  S_α = (1−α)S₀ + αS₁,  v_d = (q₁−q₀)/h,
//! ```
//!
//! so a scheme is a table of weighted samples: Lagrangian samples build
//! `L_d`, force samples attach `F⁻` at `q₀` and `F⁺` at `q₁` (fiber
//! preservation), and constraint samples build `P_d`. The extended Verlet
//! scheme is the single sample `α = 0`, the midpoint rule is `α = ½`, and
//! the symmetrized scheme averages `α = 0` and `α = 1`. The Lagrangian map
//! and the constraint map may be chosen independently.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::SystemModel;

/// Discrete state-space point `(q₀, q₁, S₀, S₁) ∈ (Q×Q)×(R×R)`.
///
/// Windows produced by the stepper additionally satisfy `P_d = 0` to solver
/// tolerance, i.e. they lie on the discrete constraint `C_K^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepWindow {
    pub q0: DVector<f64>,
    pub q1: DVector<f64>,
    pub s0: f64,
    pub s1: f64,
}

impl StepWindow {
    pub fn new(q0: DVector<f64>, q1: DVector<f64>, s0: f64, s1: f64) -> Result<Self> {
        if q0.len() != q1.len() || q0.is_empty() {
            return Err(Error::InvalidInput(
                "window positions must have equal dimension n >= 1".into(),
            ));
        }
        if !q0.iter().chain(q1.iter()).all(|x| x.is_finite()) || !(s0.is_finite() && s1.is_finite())
        {
            return Err(Error::InvalidInput("non-finite window component".into()));
        }
        Ok(Self { q0, q1, s0, s1 })
    }

    /// Convenience constructor for one-dimensional systems.
    pub fn scalar(x0: f64, x1: f64, s0: f64, s1: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(1, x0),
            DVector::from_element(1, x1),
            s0,
            s1,
        )
    }

    pub fn dim(&self) -> usize {
        self.q0.len()
    }
}

/// The three bundled discretizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// Extension of the Verlet scheme: one-sided sampling at `(q₀, v_d, S₀)`
    /// with `F⁺ = 0`.
    Verlet1,
    /// Variational midpoint rule: sampling at the window midpoint, forces
    /// split half/half.
    Midpoint2,
    /// Symmetrized Lagrangian integrator: the average of the two endpoint
    /// samplings, with endpoint-attached forces.
    Symmetrized3,
}

impl SchemeKind {
    pub fn label(&self) -> &'static str {
        match self {
            SchemeKind::Verlet1 => "scheme 1 (extended Verlet)",
            SchemeKind::Midpoint2 => "scheme 2 (variational midpoint)",
            SchemeKind::Symmetrized3 => "scheme 3 (symmetrized)",
        }
    }

    pub fn index(&self) -> u8 {
        match self {
            SchemeKind::Verlet1 => 1,
            SchemeKind::Midpoint2 => 2,
            SchemeKind::Symmetrized3 => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct LagSample {
    alpha: f64,
    weight: f64,
}

#[derive(Debug, Clone, Copy)]
struct ForceSample {
    alpha: f64,
    weight_minus: f64,
    weight_plus: f64,
}

#[derive(Debug, Clone, Copy)]
struct ConstraintSample {
    alpha: f64,
    weight: f64,
}

/// A discretization of a [`SystemModel`] with time step `h`: the discrete
/// Lagrangian, forces, constraint, and their analytic partial derivatives.
///
/// Immutable and freely shareable across threads.
pub struct Scheme<'m> {
    model: &'m SystemModel,
    h: f64,
    kind: Option<SchemeKind>,
    lag: Vec<LagSample>,
    forces: Vec<ForceSample>,
    constraint: Vec<ConstraintSample>,
}

impl<'m> Scheme<'m> {
    /// Builds one of the three bundled schemes.
    pub fn new(kind: SchemeKind, model: &'m SystemModel, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput("time step must satisfy h > 0".into()));
        }
        let (lag, forces, constraint) = match kind {
            SchemeKind::Verlet1 => (
                vec![LagSample {
                    alpha: 0.0,
                    weight: 1.0,
                }],
                vec![ForceSample {
                    alpha: 0.0,
                    weight_minus: 1.0,
                    weight_plus: 0.0,
                }],
                vec![ConstraintSample {
                    alpha: 0.0,
                    weight: 1.0,
                }],
            ),
            SchemeKind::Midpoint2 => (
                vec![LagSample {
                    alpha: 0.5,
                    weight: 1.0,
                }],
                vec![ForceSample {
                    alpha: 0.5,
                    weight_minus: 0.5,
                    weight_plus: 0.5,
                }],
                vec![ConstraintSample {
                    alpha: 0.5,
                    weight: 1.0,
                }],
            ),
            SchemeKind::Symmetrized3 => (
                vec![
                    LagSample {
                        alpha: 0.0,
                        weight: 0.5,
                    },
                    LagSample {
                        alpha: 1.0,
                        weight: 0.5,
                    },
                ],
                vec![
                    ForceSample {
                        alpha: 0.0,
                        weight_minus: 0.5,
                        weight_plus: 0.0,
                    },
                    ForceSample {
                        alpha: 1.0,
                        weight_minus: 0.0,
                        weight_plus: 0.5,
                    },
                ],
                vec![
                    ConstraintSample {
                        alpha: 0.0,
                        weight: 1.0,
                    },
                    ConstraintSample {
                        alpha: 1.0,
                        weight: 1.0,
                    },
                ],
            ),
        };
        Ok(Self {
            model,
            h,
            kind: Some(kind),
            lag,
            forces,
            constraint,
        })
    }

    /// Builds a scheme from the α-family of affine finite-difference maps,
    /// with independently chosen maps for the discrete Lagrangian and for
    /// the discrete constraint. `alpha = 0` recovers the extended Verlet
    /// scheme, `alpha = ½` the midpoint rule.
    pub fn from_alpha(
        model: &'m SystemModel,
        h: f64,
        alpha_lagrangian: f64,
        alpha_constraint: f64,
    ) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput("time step must satisfy h > 0".into()));
        }
        for a in [alpha_lagrangian, alpha_constraint] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidInput(format!(
                    "alpha must lie in [0, 1], got {a}"
                )));
            }
        }
        let a = alpha_lagrangian;
        Ok(Self {
            model,
            h,
            kind: None,
            lag: vec![LagSample {
                alpha: a,
                weight: 1.0,
            }],
            forces: vec![ForceSample {
                alpha: a,
                weight_minus: 1.0 - a,
                weight_plus: a,
            }],
            constraint: vec![ConstraintSample {
                alpha: alpha_constraint,
                weight: 1.0,
            }],
        })
    }

    pub fn kind(&self) -> Option<SchemeKind> {
        self.kind
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn model(&self) -> &'m SystemModel {
        self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    fn sample(&self, w: &StepWindow, alpha: f64) -> (DVector<f64>, f64) {
        (
            &w.q0 * (1.0 - alpha) + &w.q1 * alpha,
            (1.0 - alpha) * w.s0 + alpha * w.s1,
        )
    }

    /// Discrete velocity `(q₁ − q₀)/h`.
    pub fn velocity(&self, w: &StepWindow) -> DVector<f64> {
        (&w.q1 - &w.q0) / self.h
    }

    fn entropy_rate(&self, w: &StepWindow) -> f64 {
        (w.s1 - w.s0) / self.h
    }

    /// Discrete Lagrangian `L_d` (J·s).
    pub fn discrete_lagrangian(&self, w: &StepWindow) -> f64 {
        let v = self.velocity(w);
        let kin = self.model.kinetic(&v);
        self.lag
            .iter()
            .map(|s| {
                let (q, sa) = self.sample(w, s.alpha);
                s.weight * self.h * (kin - self.model.potential_energy(&q, sa))
            })
            .sum()
    }

    /// `D₁L_d` (derivative with respect to `q₀`).
    pub fn d1_lagrangian(&self, w: &StepWindow) -> DVector<f64> {
        let v = self.velocity(w);
        let mv = self.model.mass() * &v;
        let mut out = DVector::zeros(self.dim());
        for s in &self.lag {
            let (q, sa) = self.sample(w, s.alpha);
            let uq = self.model.potential().grad_q(&q, sa);
            out += s.weight * (-(1.0 - s.alpha) * self.h * uq - &mv);
        }
        out
    }

    /// `D₂L_d` (derivative with respect to `q₁`).
    pub fn d2_lagrangian(&self, w: &StepWindow) -> DVector<f64> {
        let v = self.velocity(w);
        let mv = self.model.mass() * &v;
        let mut out = DVector::zeros(self.dim());
        for s in &self.lag {
            let (q, sa) = self.sample(w, s.alpha);
            let uq = self.model.potential().grad_q(&q, sa);
            out += s.weight * (-s.alpha * self.h * uq + &mv);
        }
        out
    }

    /// `D₃L_d` (derivative with respect to `S₀`).
    pub fn d3_lagrangian(&self, w: &StepWindow) -> f64 {
        self.lag
            .iter()
            .map(|s| {
                let (q, sa) = self.sample(w, s.alpha);
                -s.weight * (1.0 - s.alpha) * self.h * self.model.potential().d_s(&q, sa)
            })
            .sum()
    }

    /// `D₄L_d` (derivative with respect to `S₁`).
    pub fn d4_lagrangian(&self, w: &StepWindow) -> f64 {
        self.lag
            .iter()
            .map(|s| {
                let (q, sa) = self.sample(w, s.alpha);
                -s.weight * s.alpha * self.h * self.model.potential().d_s(&q, sa)
            })
            .sum()
    }

    /// `D₂D₁L_d`, the top-left block of the regularity matrix before forces.
    pub fn d2_d1_lagrangian(&self, w: &StepWindow) -> DMatrix<f64> {
        let n = self.dim();
        let m_over_h = self.model.mass() / self.h;
        let mut out = DMatrix::zeros(n, n);
        for s in &self.lag {
            let (q, sa) = self.sample(w, s.alpha);
            let coeff = s.alpha * (1.0 - s.alpha) * self.h;
            if coeff != 0.0 {
                out -= s.weight * coeff * self.model.potential().hess_qq(&q, sa);
            }
            out -= s.weight * &m_over_h;
        }
        out
    }

    /// `D₄D₁L_d`.
    pub fn d4_d1_lagrangian(&self, w: &StepWindow) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for s in &self.lag {
            let coeff = s.alpha * (1.0 - s.alpha) * self.h;
            if coeff != 0.0 {
                let (q, sa) = self.sample(w, s.alpha);
                out -= s.weight * coeff * self.model.potential().grad_sq(&q, sa);
            }
        }
        out
    }

    fn force_sum(
        &self,
        w: &StepWindow,
        pick: impl Fn(&ForceSample) -> f64,
        friction: bool,
    ) -> DVector<f64> {
        let v = self.velocity(w);
        let mut out = DVector::zeros(self.dim());
        for s in &self.forces {
            let weight = pick(s);
            if weight == 0.0 {
                continue;
            }
            let (q, sa) = self.sample(w, s.alpha);
            let f = if friction {
                self.model.friction_force(&q, &v, sa)
            } else {
                self.model.external_force(&q, &v, sa)
            };
            out += weight * self.h * f;
        }
        out
    }

    /// Discrete friction force attached at `q₀`.
    pub fn friction_minus(&self, w: &StepWindow) -> DVector<f64> {
        self.force_sum(w, |s| s.weight_minus, true)
    }

    /// Discrete friction force attached at `q₁`.
    pub fn friction_plus(&self, w: &StepWindow) -> DVector<f64> {
        self.force_sum(w, |s| s.weight_plus, true)
    }

    /// Discrete external force attached at `q₀`.
    pub fn external_minus(&self, w: &StepWindow) -> DVector<f64> {
        self.force_sum(w, |s| s.weight_minus, false)
    }

    /// Discrete external force attached at `q₁`.
    pub fn external_plus(&self, w: &StepWindow) -> DVector<f64> {
        self.force_sum(w, |s| s.weight_plus, false)
    }

    /// `F⁻ = F^{fr−} + F^{ext−}`.
    pub fn force_minus(&self, w: &StepWindow) -> DVector<f64> {
        self.friction_minus(w) + self.external_minus(w)
    }

    /// `F⁺ = F^{fr+} + F^{ext+}`.
    pub fn force_plus(&self, w: &StepWindow) -> DVector<f64> {
        self.friction_plus(w) + self.external_plus(w)
    }

    /// `∂F⁻/∂q₁` for the combined friction + external discrete force.
    pub fn d2_force_minus(&self, w: &StepWindow) -> DMatrix<f64> {
        let n = self.dim();
        let v = self.velocity(w);
        let mut out = DMatrix::zeros(n, n);
        for s in &self.forces {
            if s.weight_minus == 0.0 {
                continue;
            }
            let (q, sa) = self.sample(w, s.alpha);
            let dq = self.model.friction().d_q(&q, &v, sa) + self.model.external().d_q(&q, &v, sa);
            let dv = self.model.friction().d_v(&q, &v, sa) + self.model.external().d_v(&q, &v, sa);
            out += s.weight_minus * (s.alpha * self.h * dq + dv);
        }
        out
    }

    /// `∂F⁻/∂S₁` for the combined friction + external discrete force.
    pub fn d4_force_minus(&self, w: &StepWindow) -> DVector<f64> {
        let v = self.velocity(w);
        let mut out = DVector::zeros(self.dim());
        for s in &self.forces {
            let coeff = s.weight_minus * s.alpha * self.h;
            if coeff == 0.0 {
                continue;
            }
            let (q, sa) = self.sample(w, s.alpha);
            out += coeff
                * (self.model.friction().d_s(&q, &v, sa) + self.model.external().d_s(&q, &v, sa));
        }
        out
    }

    /// Discrete phenomenological constraint residual
    /// `P_d = Σ w [ ∂U/∂S(q_α, S_α)·(S₁−S₀)/h + ⟨F^fr(q_α, v_d, S_α), v_d⟩ ]`.
    ///
    /// `P_d = 0` is the discrete counterpart of `T Ṡ = −⟨F^fr, q̇⟩` (external
    /// heat power is zero in the discrete setting).
    pub fn constraint_residual(&self, w: &StepWindow) -> f64 {
        let v = self.velocity(w);
        let ds = self.entropy_rate(w);
        self.constraint
            .iter()
            .map(|s| {
                let (q, sa) = self.sample(w, s.alpha);
                let us = self.model.potential().d_s(&q, sa);
                let f = self.model.friction_force(&q, &v, sa);
                s.weight * (us * ds + f.dot(&v))
            })
            .sum()
    }

    /// All four partial derivatives `(D₁P_d, D₂P_d, D₃P_d, D₄P_d)`.
    pub fn constraint_gradient(&self, w: &StepWindow) -> (DVector<f64>, DVector<f64>, f64, f64) {
        let n = self.dim();
        let v = self.velocity(w);
        let ds = self.entropy_rate(w);
        let mut d1 = DVector::zeros(n);
        let mut d2 = DVector::zeros(n);
        let mut d3 = 0.0;
        let mut d4 = 0.0;
        for s in &self.constraint {
            let a = s.alpha;
            let (q, sa) = self.sample(w, a);
            let p = self.model.potential();
            let us = p.d_s(&q, sa);
            let uss = p.d_ss(&q, sa);
            let usq = p.grad_sq(&q, sa);
            let f = self.model.friction_force(&q, &v, sa);
            let fq_t_v = self.model.friction().d_q(&q, &v, sa).transpose() * &v;
            let fv_t_v = self.model.friction().d_v(&q, &v, sa).transpose() * &v;
            let fs_dot_v = self.model.friction().d_s(&q, &v, sa).dot(&v);

            d1 += s.weight
                * ((1.0 - a) * ds * &usq + (1.0 - a) * &fq_t_v - &fv_t_v / self.h - &f / self.h);
            d2 += s.weight * (a * ds * usq + a * fq_t_v + fv_t_v / self.h + f / self.h);
            d3 += s.weight * ((1.0 - a) * uss * ds - us / self.h + (1.0 - a) * fs_dot_v);
            d4 += s.weight * (a * uss * ds + us / self.h + a * fs_dot_v);
        }
        (d1, d2, d3, d4)
    }

    /// Scheme-consistent total-energy sample: the continuous energy
    /// `E = ½vᵀMv + U` composed with the scheme's discretizing map
    /// (averaged over the Lagrangian samples).
    pub fn energy(&self, w: &StepWindow) -> f64 {
        let v = self.velocity(w);
        let kin = self.model.kinetic(&v);
        self.lag
            .iter()
            .map(|s| {
                let (q, sa) = self.sample(w, s.alpha);
                s.weight * (kin + self.model.potential_energy(&q, sa))
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{mass_spring_gas_model, IdealGasParams, MassSpringParams};

    const R_GAS: f64 = 8.314462618;

    fn case1_model(lambda: f64) -> crate::models::SystemModel {
        let mp = MassSpringParams::new(5.0, 5.0, lambda).unwrap();
        let gp = IdealGasParams::new(1.5, 1.0, R_GAS, 300.0, 0.0, 2.494e-2).unwrap();
        mass_spring_gas_model(&mp, &gp, None).unwrap()
    }

    fn window() -> StepWindow {
        StepWindow::scalar(0.28, 0.31, 0.001, 0.0013).unwrap()
    }

    #[test]
    fn verlet_lagrangian_with_zero_velocity() {
        let model = case1_model(0.2);
        let scheme = Scheme::new(SchemeKind::Verlet1, &model, 1e-3).unwrap();
        let w = StepWindow::scalar(0.3, 0.3, 0.0, 0.0).unwrap();
        // L_d = h L(q0, 0, S0) = -h U(q0, S0).
        let expected = -1e-3 * model.potential_energy(&w.q0, w.s0);
        assert!((scheme.discrete_lagrangian(&w) - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn verlet_constraint_matches_entropy_production_identity() {
        // (dU/dS)(S_k)(S_{k+1}-S_k)/h = lambda ((x_{k+1}-x_k)/h)^2
        let model = case1_model(0.2);
        let h = 1e-3;
        let scheme = Scheme::new(SchemeKind::Verlet1, &model, h).unwrap();
        let (x0, x1, s0) = (0.3, 0.30031, 0.0);
        let v = (x1 - x0) / h;
        let t0 = 300.0;
        let s1 = s0 + h * 0.2 * v * v / t0;
        let w = StepWindow::scalar(x0, x1, s0, s1).unwrap();
        let scale = t0 * (s1 - s0) / h;
        assert!(scheme.constraint_residual(&w).abs() <= 1e-12 * scale.abs().max(1.0));
    }

    #[test]
    fn symmetrized_lagrangian_is_time_reversal_symmetric() {
        let model = case1_model(0.2);
        let scheme = Scheme::new(SchemeKind::Symmetrized3, &model, 1e-3).unwrap();
        let w = window();
        let reversed = StepWindow::scalar(w.q1[0], w.q0[0], w.s1, w.s0).unwrap();
        let a = scheme.discrete_lagrangian(&w);
        let b = scheme.discrete_lagrangian(&reversed);
        assert!((a - b).abs() <= 1e-14 * a.abs());
    }

    #[test]
    fn alpha_family_recovers_bundled_schemes() {
        let model = case1_model(0.2);
        let h = 1e-3;
        let w = window();
        for (kind, alpha) in [(SchemeKind::Verlet1, 0.0), (SchemeKind::Midpoint2, 0.5)] {
            let named = Scheme::new(kind, &model, h).unwrap();
            let generic = Scheme::from_alpha(&model, h, alpha, alpha).unwrap();
            assert_eq!(named.discrete_lagrangian(&w), generic.discrete_lagrangian(&w));
            assert_eq!(named.d1_lagrangian(&w), generic.d1_lagrangian(&w));
            assert_eq!(named.d4_lagrangian(&w), generic.d4_lagrangian(&w));
            assert_eq!(named.friction_minus(&w), generic.friction_minus(&w));
            assert_eq!(named.friction_plus(&w), generic.friction_plus(&w));
            assert_eq!(named.constraint_residual(&w), generic.constraint_residual(&w));
            assert_eq!(named.energy(&w), generic.energy(&w));
        }
    }

    #[test]
    fn verlet_forces_are_one_sided() {
        let model = case1_model(0.2);
        let scheme = Scheme::new(SchemeKind::Verlet1, &model, 1e-3).unwrap();
        let w = window();
        assert_eq!(scheme.friction_plus(&w)[0], 0.0);
        // F^- = h F^fr(q0, v_d, S0) = -h lambda v_d.
        let v = scheme.velocity(&w)[0];
        let expected = -1e-3 * 0.2 * v;
        assert!((scheme.friction_minus(&w)[0] - expected).abs() <= 1e-15);
        // Scheme 1 never samples S1: D4 L_d = 0.
        assert_eq!(scheme.d4_lagrangian(&w), 0.0);
    }

    fn fd_partial(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let e = 1e-7 * (1.0 + x.abs());
        (f(x + e) - f(x - e)) / (2.0 * e)
    }

    #[test]
    fn lagrangian_partials_match_finite_differences() {
        let model = case1_model(0.2);
        let w = window();
        for kind in [
            SchemeKind::Verlet1,
            SchemeKind::Midpoint2,
            SchemeKind::Symmetrized3,
        ] {
            let scheme = Scheme::new(kind, &model, 1e-3).unwrap();
            let with = |x0: f64, x1: f64, s0: f64, s1: f64| {
                scheme.discrete_lagrangian(&StepWindow::scalar(x0, x1, s0, s1).unwrap())
            };
            let (x0, x1, s0, s1) = (w.q0[0], w.q1[0], w.s0, w.s1);
            let checks = [
                (fd_partial(|x| with(x, x1, s0, s1), x0), scheme.d1_lagrangian(&w)[0]),
                (fd_partial(|x| with(x0, x, s0, s1), x1), scheme.d2_lagrangian(&w)[0]),
                (fd_partial(|s| with(x0, x1, s, s1), s0), scheme.d3_lagrangian(&w)),
                (fd_partial(|s| with(x0, x1, s0, s), s1), scheme.d4_lagrangian(&w)),
            ];
            for (fd, analytic) in checks {
                assert!(
                    (fd - analytic).abs() <= 1e-6 * analytic.abs().max(1.0),
                    "{kind:?}: fd {fd} vs analytic {analytic}"
                );
            }
        }
    }

    #[test]
    fn constraint_gradient_matches_finite_differences() {
        let model = case1_model(0.7);
        let w = window();
        for kind in [
            SchemeKind::Verlet1,
            SchemeKind::Midpoint2,
            SchemeKind::Symmetrized3,
        ] {
            let scheme = Scheme::new(kind, &model, 1e-3).unwrap();
            let with = |x0: f64, x1: f64, s0: f64, s1: f64| {
                scheme.constraint_residual(&StepWindow::scalar(x0, x1, s0, s1).unwrap())
            };
            let (x0, x1, s0, s1) = (w.q0[0], w.q1[0], w.s0, w.s1);
            let (d1, d2, d3, d4) = scheme.constraint_gradient(&w);
            let checks = [
                (fd_partial(|x| with(x, x1, s0, s1), x0), d1[0]),
                (fd_partial(|x| with(x0, x, s0, s1), x1), d2[0]),
                (fd_partial(|s| with(x0, x1, s, s1), s0), d3),
                (fd_partial(|s| with(x0, x1, s0, s), s1), d4),
            ];
            let scale = checks
                .iter()
                .map(|(fd, _)| fd.abs())
                .fold(1.0f64, f64::max);
            for (fd, analytic) in checks {
                assert!(
                    (fd - analytic).abs() <= 1e-5 * scale,
                    "{kind:?}: fd {fd} vs analytic {analytic}"
                );
            }
        }
    }

    #[test]
    fn invalid_construction_rejected() {
        let model = case1_model(0.2);
        assert!(Scheme::new(SchemeKind::Verlet1, &model, 0.0).is_err());
        assert!(Scheme::from_alpha(&model, 1e-3, 1.5, 0.5).is_err());
        assert!(StepWindow::scalar(f64::INFINITY, 0.0, 0.0, 0.0).is_err());
    }
}
