//! Continuous-time reference: the coupled evolution equations, a fixed-step
//! RK4 integrator, and the closed-form solution of the mass–spring–friction
//! benchmark.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::models::{total_energy, IdealGasParams, MassSpringParams, SystemModel, ThermoState};
use crate::trajectory::TrajectoryRecord;

/// Right-hand side of the evolution equations for a simple closed system:
///
/// ```text
/// q̇ = v
/// v̇ = M⁻¹ (−∂U/∂q + F^ext + F^fr)
/// Ṡ = (P_H^ext(t) − ⟨F^fr, v⟩) / T,   T = ∂U/∂S > 0
/// ```
pub fn evolution_rhs(
    model: &SystemModel,
    state: &ThermoState,
    t: f64,
) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let q = &state.q;
    let v = &state.v;
    let s = state.s;
    let f_fr = model.friction_force(q, v, s);
    let f_ext = model.external_force(q, v, s);
    let rhs_q = -model.potential().grad_q(q, s) + &f_ext + &f_fr;
    let v_dot = model.mass_solve(&rhs_q);
    let temp = model.temperature(q, s)?;
    let s_dot = (model.heat_power(t) - f_fr.dot(v)) / temp;
    Ok((v.clone(), v_dot, s_dot))
}

fn rhs_tuple(model: &SystemModel, q: &DVector<f64>, v: &DVector<f64>, s: f64, t: f64)
    -> Result<(DVector<f64>, DVector<f64>, f64)>
{
    let state = ThermoState {
        q: q.clone(),
        v: v.clone(),
        s,
    };
    evolution_rhs(model, &state, t)
}

/// Integrates the evolution equations with the classical fixed-step RK4
/// method, recording diagnostics at every node (`steps + 1` rows including
/// the initial state).
pub fn rk4_trajectory(
    model: &SystemModel,
    init: &ThermoState,
    h: f64,
    steps: usize,
) -> Result<Vec<TrajectoryRecord>> {
    if !(h > 0.0) || steps < 1 {
        return Err(Error::InvalidInput("require h > 0 and steps >= 1".into()));
    }
    let mut q = init.q.clone();
    let mut v = init.v.clone();
    let mut s = init.s;
    let mut records = Vec::with_capacity(steps + 1);
    let mut e0 = 0.0;
    for k in 0..=steps {
        let t = k as f64 * h;
        let state = ThermoState {
            q: q.clone(),
            v: v.clone(),
            s,
        };
        let energy = total_energy(model, &state).map_err(|e| e.at_step(k))?;
        if k == 0 {
            e0 = energy;
        }
        records.push(TrajectoryRecord {
            step: k,
            t,
            q: q.clone(),
            v: v.clone(),
            s,
            temperature: model.temperature(&q, s).map_err(|e| e.at_step(k))?,
            internal_energy: model.potential().internal_energy(&q, s),
            energy,
            rel_energy_err: (energy - e0).abs() / e0.abs(),
        });
        if k == steps {
            break;
        }

        let step_err = |e: Error| e.at_step(k);
        let (k1q, k1v, k1s) = rhs_tuple(model, &q, &v, s, t).map_err(step_err)?;
        let (k2q, k2v, k2s) = rhs_tuple(
            model,
            &(&q + &k1q * (h / 2.0)),
            &(&v + &k1v * (h / 2.0)),
            s + k1s * (h / 2.0),
            t + h / 2.0,
        )
        .map_err(step_err)?;
        let (k3q, k3v, k3s) = rhs_tuple(
            model,
            &(&q + &k2q * (h / 2.0)),
            &(&v + &k2v * (h / 2.0)),
            s + k2s * (h / 2.0),
            t + h / 2.0,
        )
        .map_err(step_err)?;
        let (k4q, k4v, k4s) = rhs_tuple(
            model,
            &(&q + &k3q * h),
            &(&v + &k3v * h),
            s + k3s * h,
            t + h,
        )
        .map_err(step_err)?;

        q += (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (h / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        s += (k1s + 2.0 * k2s + 2.0 * k3s + k4s) * (h / 6.0);
    }
    Ok(records)
}

/// Closed-form solution of the benchmark in the underdamped regime
/// `κ = λ/(2m) < ω₀ = √(k/m)`.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolutionParams {
    pub mp: MassSpringParams,
    pub gp: IdealGasParams,
    pub x0: f64,
    pub v0: f64,
    /// Entropy at `t = 0` (equals `gp.s0` for the paper's experiments).
    pub s_init: f64,
    /// Temperature at `t = 0`, derived from `s_init`.
    pub t_init: f64,
    pub kappa: f64,
    pub omega0: f64,
    pub omega: f64,
}

impl ExactSolutionParams {
    pub fn new(
        mp: &MassSpringParams,
        gp: &IdealGasParams,
        x0: f64,
        v0: f64,
        s_init: f64,
    ) -> Result<Self> {
        let kappa = mp.lambda / (2.0 * mp.m);
        let omega0 = (mp.k / mp.m).sqrt();
        if kappa >= omega0 {
            return Err(Error::DegenerateRegime(format!(
                "closed form requires kappa = {kappa} < omega0 = {omega0} (underdamped); \
                 lambda^2 = {} vs 4km = {}",
                mp.lambda * mp.lambda,
                4.0 * mp.k * mp.m
            )));
        }
        let omega = (omega0 * omega0 - kappa * kappa).sqrt();
        let t_init = gp.temperature(s_init)?;
        Ok(Self {
            mp: *mp,
            gp: *gp,
            x0,
            v0,
            s_init,
            t_init,
            kappa,
            omega0,
            omega,
        })
    }

    /// Position and velocity `(x(t), ẋ(t))`.
    pub fn position(&self, t: f64) -> (f64, f64) {
        let (k, w) = (self.kappa, self.omega);
        let decay = (-k * t).exp();
        let b = (self.v0 + k * self.x0) / w;
        let (sin, cos) = (w * t).sin_cos();
        let x = decay * (self.x0 * cos + b * sin);
        let xdot = decay * (self.v0 * cos - (k * b + self.x0 * w) * sin);
        (x, xdot)
    }

    /// Dissipated energy `f(t) = λ ∫₀ᵗ ẋ²(s) ds`, in closed form.
    ///
    /// `f` is nondecreasing, `f(0) = 0`, and `f(t) → ½mv₀² + ½kx₀²` as
    /// `t → ∞`.
    pub fn dissipated(&self, t: f64) -> f64 {
        let (m, k, l) = (self.mp.m, self.mp.k, self.mp.lambda);
        let (x0, v0) = (self.x0, self.v0);
        let total = 0.5 * m * v0 * v0 + 0.5 * k * x0 * x0;
        let denom = 4.0 * k * m - l * l; // > 0 in the underdamped regime
        let (sin2, cos2) = (2.0 * self.omega * t).sin_cos();
        let transient = (-l / m * t).exp()
            * (4.0 * k * m * (m * v0 * v0 + l * v0 * x0 + k * x0 * x0)
                - l * (v0 * v0 * l * m + 4.0 * v0 * m * k * x0 + l * k * x0 * x0) * cos2
                - l * (m * v0 * v0 - k * x0 * x0) * denom.sqrt() * sin2);
        total - transient / (2.0 * denom)
    }

    /// Temperature `T(t) = T(0) + f(t)/(cNR)`.
    pub fn temperature(&self, t: f64) -> f64 {
        self.t_init + self.dissipated(t) / self.gp.heat_capacity()
    }

    /// Entropy `S(t) = S(0) + cNR ln(T(t)/T(0))`.
    pub fn entropy(&self, t: f64) -> f64 {
        self.s_init + self.gp.heat_capacity() * (self.temperature(t) / self.t_init).ln()
    }

    /// Internal energy `𝒰(t) = cNR·T(t) = 𝒰(0) + f(t)`.
    pub fn internal_energy(&self, t: f64) -> f64 {
        self.gp.heat_capacity() * self.temperature(t)
    }
}
