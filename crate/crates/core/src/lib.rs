//! Variational integrators for the nonequilibrium thermodynamics of simple
//! closed systems.
//!
//! A *simple system* couples a finite set of mechanical variables `(q, q̇)`
//! with a single entropy variable `S`. Its dynamics follow from a Lagrangian
//! `L(q, q̇, S) = K(q̇) − U(q, S)` together with a friction force `F^fr` and
//! the phenomenological constraint `(∂L/∂S) Ṡ = ⟨F^fr, q̇⟩ − P_H^ext`, which
//! encodes entropy production by friction.
//!
//! The crate provides:
//!
//! * [`models`] — the system abstraction (mass matrix, potential with
//!   analytic partials, friction/external forces, heat power) and the
//!   concrete mass–spring–friction-in-ideal-gas benchmark;
//! * [`continuous`] — the coupled ODE system, a fixed-step RK4 reference
//!   integrator, and the closed-form solution of the benchmark;
//! * [`integrators`] — three discrete variational schemes (an extended
//!   Verlet scheme, a midpoint rule, and a symmetrized scheme), a generic
//!   α-parameterized scheme builder, the coupled implicit stepper, and the
//!   regularity-matrix machinery that guarantees a well-defined discrete
//!   flow;
//! * [`geometry`] — discrete one-forms, Legendre transforms with forces,
//!   and a numerical verification of the structure-preservation identity
//!   that generalizes symplecticity to dissipative systems;
//! * [`trajectory`] — per-step diagnostics records and their CSV encoding.

pub mod continuous;
pub mod error;
pub mod geometry;
pub mod integrators;
pub mod models;
pub mod trajectory;

pub use error::{Error, Result};
pub use models::{
    mass_spring_gas_model, IdealGasParams, MassSpringParams, SystemModel, ThermoState,
};

pub use integrators::{Scheme, SchemeKind, StepWindow};
pub use trajectory::TrajectoryRecord;
