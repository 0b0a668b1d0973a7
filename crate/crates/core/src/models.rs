//! Simple-system models: Lagrangian split `K − U`, forces, heat power, and
//! the concrete mass–spring–friction-in-ideal-gas benchmark.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative step used by the finite-difference fallbacks for user-defined
/// potentials and forces.
const FD_STEP: f64 = 1e-6;
/// Coarser step for second-derivative fallbacks, which difference the
/// (possibly already finite-differenced) first derivatives.
const FD_STEP2: f64 = 1e-4;

fn fd_step(x: f64) -> f64 {
    FD_STEP * (1.0 + x.abs())
}

fn fd_step2(x: f64) -> f64 {
    FD_STEP2 * (1.0 + x.abs())
}

/// Continuous state `(q, v, S)` of a simple system.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoState {
    pub q: DVector<f64>,
    pub v: DVector<f64>,
    pub s: f64,
}

impl ThermoState {
    /// Builds a state, checking that `q` and `v` have equal dimension and
    /// that every component is finite.
    pub fn new(q: DVector<f64>, v: DVector<f64>, s: f64) -> Result<Self> {
        if q.len() != v.len() {
            return Err(Error::InvalidInput(format!(
                "position dimension {} != velocity dimension {}",
                q.len(),
                v.len()
            )));
        }
        if q.is_empty() {
            return Err(Error::InvalidInput("state dimension must be >= 1".into()));
        }
        if !q.iter().chain(v.iter()).all(|x| x.is_finite()) || !s.is_finite() {
            return Err(Error::InvalidInput("non-finite state component".into()));
        }
        Ok(Self { q, v, s })
    }

    /// Convenience constructor for one-dimensional systems.
    pub fn scalar(x: f64, v: f64, s: f64) -> Result<Self> {
        Self::new(DVector::from_element(1, x), DVector::from_element(1, v), s)
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// Potential energy `U(q, S)` with analytic partial derivatives.
///
/// The default methods fall back to central finite differences so that
/// user-defined potentials only have to provide `value`. The benchmark
/// potential overrides everything analytically; the regularity matrices
/// consume the second partials directly.
pub trait Potential: Send + Sync {
    fn value(&self, q: &DVector<f64>, s: f64) -> f64;

    /// `∂U/∂q` (a covector, N).
    fn grad_q(&self, q: &DVector<f64>, s: f64) -> DVector<f64> {
        let n = q.len();
        let mut g = DVector::zeros(n);
        let mut qp = q.clone();
        for i in 0..n {
            let e = fd_step(q[i]);
            qp[i] = q[i] + e;
            let up = self.value(&qp, s);
            qp[i] = q[i] - e;
            let um = self.value(&qp, s);
            qp[i] = q[i];
            g[i] = (up - um) / (2.0 * e);
        }
        g
    }

    /// `∂U/∂S` (K). Positive for any physical model (Assumption II).
    fn d_s(&self, q: &DVector<f64>, s: f64) -> f64 {
        let e = fd_step(s);
        (self.value(q, s + e) - self.value(q, s - e)) / (2.0 * e)
    }

    /// `∂²U/∂q²`.
    fn hess_qq(&self, q: &DVector<f64>, s: f64) -> DMatrix<f64> {
        let n = q.len();
        let mut h = DMatrix::zeros(n, n);
        let mut qp = q.clone();
        for j in 0..n {
            let e = fd_step2(q[j]);
            qp[j] = q[j] + e;
            let gp = self.grad_q(&qp, s);
            qp[j] = q[j] - e;
            let gm = self.grad_q(&qp, s);
            qp[j] = q[j];
            let col = (gp - gm) / (2.0 * e);
            h.set_column(j, &col);
        }
        h
    }

    /// `∂²U/∂S∂q`.
    fn grad_sq(&self, q: &DVector<f64>, s: f64) -> DVector<f64> {
        let e = fd_step2(s);
        (self.grad_q(q, s + e) - self.grad_q(q, s - e)) / (2.0 * e)
    }

    /// `∂²U/∂S²`.
    fn d_ss(&self, q: &DVector<f64>, s: f64) -> f64 {
        let e = fd_step2(s);
        (self.d_s(q, s + e) - self.d_s(q, s - e)) / (2.0 * e)
    }

    /// Entropy-dependent part of the potential, when the model distinguishes
    /// one (the gas internal energy for the benchmark). Falls back to the
    /// full potential. Used for diagnostics only.
    fn internal_energy(&self, q: &DVector<f64>, s: f64) -> f64 {
        self.value(q, s)
    }
}

/// A fiber-preserving force `F(q, v, S)` with analytic partial derivatives;
/// finite-difference fallbacks mirror [`Potential`].
pub trait Force: Send + Sync {
    fn value(&self, q: &DVector<f64>, v: &DVector<f64>, s: f64) -> DVector<f64>;

    /// `∂F/∂q` as the matrix `[∂F_i/∂q_j]`.
    fn d_q(&self, q: &DVector<f64>, v: &DVector<f64>, s: f64) -> DMatrix<f64> {
        let n = q.len();
        let mut m = DMatrix::zeros(n, n);
        let mut qp = q.clone();
        for j in 0..n {
            let e = fd_step(q[j]);
            qp[j] = q[j] + e;
            let fp = self.value(&qp, v, s);
            qp[j] = q[j] - e;
            let fm = self.value(&qp, v, s);
            qp[j] = q[j];
            m.set_column(j, &((fp - fm) / (2.0 * e)));
        }
        m
    }

    /// `∂F/∂v` as the matrix `[∂F_i/∂v_j]`.
    fn d_v(&self, q: &DVector<f64>, v: &DVector<f64>, s: f64) -> DMatrix<f64> {
        let n = v.len();
        let mut m = DMatrix::zeros(n, n);
        let mut vp = v.clone();
        for j in 0..n {
            let e = fd_step(v[j]);
            vp[j] = v[j] + e;
            let fp = self.value(q, &vp, s);
            vp[j] = v[j] - e;
            let fm = self.value(q, &vp, s);
            vp[j] = v[j];
            m.set_column(j, &((fp - fm) / (2.0 * e)));
        }
        m
    }

    /// `∂F/∂S`.
    fn d_s(&self, q: &DVector<f64>, v: &DVector<f64>, s: f64) -> DVector<f64> {
        let e = fd_step(s);
        (self.value(q, v, s + e) - self.value(q, v, s - e)) / (2.0 * e)
    }
}

/// The zero force, used as the default external force.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroForce;

impl Force for ZeroForce {
    fn value(&self, q: &DVector<f64>, _v: &DVector<f64>, _s: f64) -> DVector<f64> {
        DVector::zeros(q.len())
    }
    fn d_q(&self, q: &DVector<f64>, _v: &DVector<f64>, _s: f64) -> DMatrix<f64> {
        DMatrix::zeros(q.len(), q.len())
    }
    fn d_v(&self, q: &DVector<f64>, _v: &DVector<f64>, _s: f64) -> DMatrix<f64> {
        DMatrix::zeros(q.len(), q.len())
    }
    fn d_s(&self, q: &DVector<f64>, _v: &DVector<f64>, _s: f64) -> DVector<f64> {
        DVector::zeros(q.len())
    }
}

/// Linear viscous friction `F(q, v, S) = −λ v`.
#[derive(Debug, Clone, Copy)]
pub struct ViscousFriction {
    pub lambda: f64,
}

impl Force for ViscousFriction {
    fn value(&self, _q: &DVector<f64>, v: &DVector<f64>, _s: f64) -> DVector<f64> {
        v * (-self.lambda)
    }
    fn d_q(&self, q: &DVector<f64>, _v: &DVector<f64>, _s: f64) -> DMatrix<f64> {
        DMatrix::zeros(q.len(), q.len())
    }
    fn d_v(&self, q: &DVector<f64>, _v: &DVector<f64>, _s: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal_element(q.len(), q.len(), -self.lambda)
    }
    fn d_s(&self, q: &DVector<f64>, _v: &DVector<f64>, _s: f64) -> DVector<f64> {
        DVector::zeros(q.len())
    }
}

/// A constant external force.
#[derive(Debug, Clone)]
pub struct ConstantForce {
    pub f: DVector<f64>,
}

impl Force for ConstantForce {
    fn value(&self, _q: &DVector<f64>, _v: &DVector<f64>, _s: f64) -> DVector<f64> {
        self.f.clone()
    }
    fn d_q(&self, q: &DVector<f64>, _v: &DVector<f64>, _s: f64) -> DMatrix<f64> {
        DMatrix::zeros(q.len(), q.len())
    }
    fn d_v(&self, q: &DVector<f64>, _v: &DVector<f64>, _s: f64) -> DMatrix<f64> {
        DMatrix::zeros(q.len(), q.len())
    }
    fn d_s(&self, q: &DVector<f64>, _v: &DVector<f64>, _s: f64) -> DVector<f64> {
        DVector::zeros(q.len())
    }
}

/// Ideal-gas parameters for the internal energy `𝒰(S) = 𝒰₀ e^{(S−S₀)/(cRN₀)}`.
///
/// `V` and `N` are frozen at `v0`, `n0`; the full `𝒰(S, N, V)` expression is
/// available through [`IdealGasParams::internal_energy_nv`] but the dynamics
/// only ever evaluate the `N = N₀`, `V = V₀` slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealGasParams {
    /// Initial internal energy (J); equals `c·N₀·R·T₀`.
    pub u0: f64,
    /// Heat-capacity factor (3/2 for a monatomic gas).
    pub c: f64,
    /// Mole number (mol).
    pub n0: f64,
    /// Universal gas constant (J/(mol·K)).
    pub r: f64,
    /// Reference entropy (J/K).
    pub s0: f64,
    /// Initial temperature (K).
    pub t0: f64,
    /// Volume of the room (m³), constant; carried for fidelity only.
    pub v0: f64,
}

impl IdealGasParams {
    /// Builds parameters from `(c, N₀, R, T₀, S₀, V₀)`, deriving
    /// `𝒰₀ = c·N₀·R·T₀`.
    pub fn new(c: f64, n0: f64, r: f64, t0: f64, s0: f64, v0: f64) -> Result<Self> {
        let p = Self {
            u0: c * n0 * r * t0,
            c,
            n0,
            r,
            s0,
            t0,
            v0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters with an explicit `𝒰₀`, enforcing `𝒰₀ = c·N₀·R·T₀`.
    pub fn with_u0(u0: f64, c: f64, n0: f64, r: f64, t0: f64, s0: f64, v0: f64) -> Result<Self> {
        let expected = c * n0 * r * t0;
        if (u0 - expected).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "inconsistent internal energy: U0 = {u0} but c*N0*R*T0 = {expected}"
            )));
        }
        let p = Self {
            u0,
            c,
            n0,
            r,
            s0,
            t0,
            v0,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.c > 0.0 && self.n0 > 0.0 && self.r > 0.0 && self.t0 > 0.0;
        let finite = [self.u0, self.c, self.n0, self.r, self.s0, self.t0, self.v0]
            .iter()
            .all(|x| x.is_finite());
        if !ok || !finite {
            return Err(Error::InvalidInput(
                "ideal-gas parameters require c, N0, R, T0 > 0 and finite fields".into(),
            ));
        }
        Ok(())
    }

    /// Heat capacity `c·N₀·R` (J/K).
    pub fn heat_capacity(&self) -> f64 {
        self.c * self.n0 * self.r
    }

    /// Internal energy `𝒰(S) = 𝒰₀ e^{(S−S₀)/(cRN₀)}` at `N = N₀`, `V = V₀`.
    pub fn internal_energy(&self, s: f64) -> Result<f64> {
        let u = self.u0 * ((s - self.s0) / self.heat_capacity()).exp();
        if !u.is_finite() {
            return Err(Error::RangeError(format!(
                "internal energy overflow at S = {s}"
            )));
        }
        Ok(u)
    }

    /// The full two-parameter family
    /// `𝒰(S, N, V) = 𝒰₀ e^{(S/N − S₀/N₀)/(cR)} (N/N₀)^{1/c+1} (V₀/V)^{1/c}`.
    pub fn internal_energy_nv(&self, s: f64, n: f64, v: f64) -> Result<f64> {
        if n <= 0.0 || v <= 0.0 {
            return Err(Error::InvalidInput("require N > 0 and V > 0".into()));
        }
        let exponent = (s / n - self.s0 / self.n0) / (self.c * self.r);
        let u = self.u0
            * exponent.exp()
            * (n / self.n0).powf(1.0 / self.c + 1.0)
            * (self.v0 / v).powf(1.0 / self.c);
        if !u.is_finite() {
            return Err(Error::RangeError(format!(
                "internal energy overflow at S = {s}, N = {n}, V = {v}"
            )));
        }
        Ok(u)
    }

    /// Gas temperature `T(S) = ∂𝒰/∂S = 𝒰(S)/(cRN₀) = T₀ e^{(S−S₀)/(cRN₀)}`.
    pub fn temperature(&self, s: f64) -> Result<f64> {
        Ok(self.internal_energy(s)? / self.heat_capacity())
    }
}

/// Mass, spring stiffness, and viscous friction coefficient of the benchmark
/// solid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassSpringParams {
    /// Mass of the solid (kg).
    pub m: f64,
    /// Spring constant (N/m).
    pub k: f64,
    /// Friction coefficient λ (N·s/m).
    pub lambda: f64,
}

impl MassSpringParams {
    pub fn new(m: f64, k: f64, lambda: f64) -> Result<Self> {
        if !(m > 0.0 && k > 0.0 && lambda >= 0.0)
            || ![m, k, lambda].iter().all(|x| x.is_finite())
        {
            return Err(Error::InvalidInput(
                "mass-spring parameters require m > 0, k > 0, lambda >= 0".into(),
            ));
        }
        Ok(Self { m, k, lambda })
    }
}

/// Potential `U(x, S) = ½ k x² + 𝒰(S)` of the benchmark.
#[derive(Debug, Clone)]
pub struct SpringGasPotential {
    pub k: f64,
    pub gas: IdealGasParams,
}

impl Potential for SpringGasPotential {
    fn value(&self, q: &DVector<f64>, s: f64) -> f64 {
        // Exercised only where the exponential is in range; the checked
        // entry points go through `SystemModel::temperature`.
        let gas = self.gas.u0 * ((s - self.gas.s0) / self.gas.heat_capacity()).exp();
        0.5 * self.k * q.norm_squared() + gas
    }
    fn grad_q(&self, q: &DVector<f64>, _s: f64) -> DVector<f64> {
        q * self.k
    }
    fn d_s(&self, q: &DVector<f64>, s: f64) -> f64 {
        (self.value(q, s) - 0.5 * self.k * q.norm_squared()) / self.gas.heat_capacity()
    }
    fn hess_qq(&self, q: &DVector<f64>, _s: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal_element(q.len(), q.len(), self.k)
    }
    fn grad_sq(&self, q: &DVector<f64>, _s: f64) -> DVector<f64> {
        DVector::zeros(q.len())
    }
    fn d_ss(&self, q: &DVector<f64>, s: f64) -> f64 {
        self.d_s(q, s) / self.gas.heat_capacity()
    }
    fn internal_energy(&self, _q: &DVector<f64>, s: f64) -> f64 {
        self.gas.u0 * ((s - self.gas.s0) / self.gas.heat_capacity()).exp()
    }
}

/// A simple closed system: quadratic kinetic energy `½ vᵀMv`, potential
/// `U(q, S)`, friction and external forces, and external heat power.
///
/// Immutable after construction and safe to share across threads; all
/// evaluations are pure functions of their inputs.
pub struct SystemModel {
    mass: DMatrix<f64>,
    mass_chol: Cholesky<f64, Dyn>,
    potential: Box<dyn Potential>,
    friction: Box<dyn Force>,
    external: Box<dyn Force>,
    heat_power: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemModel")
            .field("dim", &self.dim())
            .field("mass", &self.mass)
            .finish_non_exhaustive()
    }
}

impl SystemModel {
    /// Builds a model, checking that the mass matrix is symmetric positive
    /// definite.
    pub fn new(
        mass: DMatrix<f64>,
        potential: Box<dyn Potential>,
        friction: Box<dyn Force>,
        external: Box<dyn Force>,
        heat_power: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    ) -> Result<Self> {
        if mass.nrows() != mass.ncols() || mass.nrows() == 0 {
            return Err(Error::InvalidInput("mass matrix must be square, n >= 1".into()));
        }
        let asym = (&mass - mass.transpose()).abs().max();
        if asym > 1e-12 * mass.abs().max().max(1.0) {
            return Err(Error::InvalidInput("mass matrix must be symmetric".into()));
        }
        let mass_chol = Cholesky::new(mass.clone()).ok_or_else(|| {
            Error::InvalidInput("mass matrix must be positive definite".into())
        })?;
        Ok(Self {
            mass,
            mass_chol,
            potential,
            friction,
            external,
            heat_power,
        })
    }

    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// Solves `M x = b` using the cached Cholesky factorization.
    pub fn mass_solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.mass_chol.solve(b)
    }

    pub fn potential(&self) -> &dyn Potential {
        self.potential.as_ref()
    }

    /// Kinetic energy `½ vᵀ M v`.
    pub fn kinetic(&self, v: &DVector<f64>) -> f64 {
        0.5 * (v.transpose() * &self.mass * v)[(0, 0)]
    }

    pub fn potential_energy(&self, q: &DVector<f64>, s: f64) -> f64 {
        self.potential.value(q, s)
    }

    /// Friction force `F^fr(q, v, S)`. In debug builds the dissipativity
    /// condition `⟨F^fr, v⟩ <= 0` is checked on every evaluation.
    pub fn friction_force(&self, q: &DVector<f64>, v: &DVector<f64>, s: f64) -> DVector<f64> {
        let f = self.friction.value(q, v, s);
        debug_assert!(
            f.dot(v) <= 1e-12 * (1.0 + f.norm() * v.norm()),
            "friction force is not dissipative: <F, v> = {}",
            f.dot(v)
        );
        f
    }

    pub fn external_force(&self, q: &DVector<f64>, v: &DVector<f64>, s: f64) -> DVector<f64> {
        self.external.value(q, v, s)
    }

    pub fn friction(&self) -> &dyn Force {
        self.friction.as_ref()
    }

    pub fn external(&self) -> &dyn Force {
        self.external.as_ref()
    }

    /// External heat power `P_H^ext(t)` (W).
    pub fn heat_power(&self, t: f64) -> f64 {
        (self.heat_power)(t)
    }

    /// Temperature `T = ∂U/∂S(q, S)`, checked to be positive (Assumption II).
    pub fn temperature(&self, q: &DVector<f64>, s: f64) -> Result<f64> {
        let t = self.potential.d_s(q, s);
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::AssumptionViolation {
                q: q.iter().copied().collect(),
                entropy: s,
                temperature: t,
            });
        }
        Ok(t)
    }
}

/// Lagrangian `L(q, v, S) = ½ vᵀMv − U(q, S)`.
pub fn lagrangian(model: &SystemModel, state: &ThermoState) -> Result<f64> {
    check_state(model, state)?;
    Ok(model.kinetic(&state.v) - model.potential_energy(&state.q, state.s))
}

/// Temperature `T = ∂U/∂S(q, S)`; fails if the assumption `T > 0` is violated.
pub fn temperature(model: &SystemModel, q: &DVector<f64>, s: f64) -> Result<f64> {
    model.temperature(q, s)
}

/// Internal energy of the ideal gas at entropy `s`.
pub fn internal_energy(params: &IdealGasParams, s: f64) -> Result<f64> {
    params.internal_energy(s)
}

/// Total energy `E = ⟨∂L/∂v, v⟩ − L = ½ vᵀMv + U(q, S)`.
pub fn total_energy(model: &SystemModel, state: &ThermoState) -> Result<f64> {
    check_state(model, state)?;
    Ok(model.kinetic(&state.v) + model.potential_energy(&state.q, state.s))
}

fn check_state(model: &SystemModel, state: &ThermoState) -> Result<()> {
    if state.dim() != model.dim() {
        return Err(Error::InvalidInput(format!(
            "state dimension {} != model dimension {}",
            state.dim(),
            model.dim()
        )));
    }
    Ok(())
}

/// Builds the mass–spring–friction-in-ideal-gas benchmark model:
/// `U(x, S) = ½ k x² + 𝒰(S)`, `F^fr = −λ ẋ`, optional external force
/// (zero when `None`), `P_H^ext ≡ 0`.
pub fn mass_spring_gas_model(
    mp: &MassSpringParams,
    gp: &IdealGasParams,
    external: Option<Box<dyn Force>>,
) -> Result<SystemModel> {
    gp.validate()?;
    SystemModel::new(
        DMatrix::from_element(1, 1, mp.m),
        Box::new(SpringGasPotential { k: mp.k, gas: *gp }),
        Box::new(ViscousFriction { lambda: mp.lambda }),
        external.unwrap_or_else(|| Box::new(ZeroForce)),
        Box::new(|_t| 0.0),
    )
}
