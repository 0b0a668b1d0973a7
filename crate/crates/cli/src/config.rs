//! Run configuration: TOML schema, bundled presets, and translation into
//! model/scheme parameters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use varitherm::models::{ConstantForce, Force};
use varitherm::{mass_spring_gas_model, IdealGasParams, MassSpringParams, SchemeKind, SystemModel};

use crate::CliError;

/// Version of the configuration schema accepted by this binary.
pub const SCHEMA_VERSION: u32 = 1;

/// Default heat-capacity factor (monatomic gas) and universal gas constant;
/// both are overridable in the configuration file.
pub const DEFAULT_C: f64 = 1.5;
pub const DEFAULT_R: f64 = 8.314_462_618;

fn default_c() -> f64 {
    DEFAULT_C
}

fn default_r() -> f64 {
    DEFAULT_R
}

fn default_seed() -> u64 {
    0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassSpringConfig {
    /// Mass (kg).
    pub m: f64,
    /// Spring constant (N/m).
    pub k: f64,
    /// Friction coefficient (N·s/m).
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasConfig {
    /// Heat-capacity factor.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Mole number (mol).
    pub n0: f64,
    /// Universal gas constant (J/(mol·K)).
    #[serde(default = "default_r")]
    pub r: f64,
    /// Initial temperature (K).
    pub t0: f64,
    /// Reference entropy (J/K).
    pub s0: f64,
    /// Gas volume (m³); constant, carried for fidelity.
    pub v0: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    /// First position sample (m).
    pub x0: f64,
    /// Second position sample (m).
    pub x1: f64,
    /// Initial entropy (J/K).
    pub s0: f64,
}

/// External force specification; only a constant force is supported.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExternalForceConfig {
    /// Constant force (N); zero means no external force.
    #[serde(default)]
    pub constant: f64,
}

/// A full experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Scheme selector: 1, 2, or 3.
    pub scheme: u8,
    /// Time step (s).
    pub h: f64,
    /// Number of diagnostics rows (time steps).
    pub steps: usize,
    /// Seed for randomized checks.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output path for CSV/report files.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub mass_spring: MassSpringConfig,
    pub gas: GasConfig,
    pub init: InitConfig,
    #[serde(default)]
    pub external_force: ExternalForceConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("bad config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(1..=3).contains(&self.scheme) {
            return Err(CliError::Config(format!(
                "scheme must be 1, 2, or 3, got {}",
                self.scheme
            )));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(CliError::Config("time step h must be > 0".into()));
        }
        if self.steps < 1 {
            return Err(CliError::Config("steps must be >= 1".into()));
        }
        self.mass_spring_params()?;
        self.gas_params()?;
        for (name, value) in [
            ("init.x0", self.init.x0),
            ("init.x1", self.init.x1),
            ("init.s0", self.init.s0),
            ("external_force.constant", self.external_force.constant),
        ] {
            if !value.is_finite() {
                return Err(CliError::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn scheme_kind(&self) -> Result<SchemeKind, CliError> {
        match self.scheme {
            1 => Ok(SchemeKind::Verlet1),
            2 => Ok(SchemeKind::Midpoint2),
            3 => Ok(SchemeKind::Symmetrized3),
            other => Err(CliError::Config(format!("scheme must be 1..3, got {other}"))),
        }
    }

    pub fn mass_spring_params(&self) -> Result<MassSpringParams, CliError> {
        MassSpringParams::new(self.mass_spring.m, self.mass_spring.k, self.mass_spring.lambda)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn gas_params(&self) -> Result<IdealGasParams, CliError> {
        IdealGasParams::new(
            self.gas.c,
            self.gas.n0,
            self.gas.r,
            self.gas.t0,
            self.gas.s0,
            self.gas.v0,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Builds the benchmark system model described by this configuration.
    pub fn build_model(&self) -> Result<SystemModel, CliError> {
        let external: Option<Box<dyn Force>> = if self.external_force.constant != 0.0 {
            Some(Box::new(ConstantForce {
                f: nalgebra::DVector::from_element(1, self.external_force.constant),
            }))
        } else {
            None
        };
        mass_spring_gas_model(&self.mass_spring_params()?, &self.gas_params()?, external)
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Bundled experiment presets. Both use `h = 10⁻³ s`, `10⁵` steps,
/// `T₀ = 300 K`, `S₀ = 0`, and a friction coefficient of `0.2` that is
/// normally overridden from the command line.
pub fn preset(name: &str) -> Result<RunConfig, CliError> {
    let (m, k, n0, v0, x0) = match name {
        "case1" => (5.0, 5.0, 1.0, 2.494e-2, 0.3),
        "case2" => (10.0, 20.0, 2.0, 9.9775e-2, 0.1),
        other => {
            return Err(CliError::Config(format!(
                "unknown preset '{other}' (expected case1 or case2)"
            )))
        }
    };
    Ok(RunConfig {
        schema_version: SCHEMA_VERSION,
        scheme: 1,
        h: 1e-3,
        steps: 100_000,
        seed: default_seed(),
        output: None,
        mass_spring: MassSpringConfig {
            m,
            k,
            lambda: 0.2,
        },
        gas: GasConfig {
            c: DEFAULT_C,
            n0,
            r: DEFAULT_R,
            t0: 300.0,
            s0: 0.0,
            v0,
        },
        init: InitConfig {
            x0,
            x1: x0,
            s0: 0.0,
        },
        external_force: ExternalForceConfig::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_encode_the_benchmark_parameters() {
        let c1 = preset("case1").unwrap();
        assert_eq!(c1.mass_spring.m, 5.0);
        assert_eq!(c1.mass_spring.k, 5.0);
        assert_eq!(c1.gas.n0, 1.0);
        assert_eq!(c1.gas.v0, 2.494e-2);
        assert_eq!(c1.init.x0, 0.3);
        assert_eq!(c1.h, 1e-3);
        assert_eq!(c1.steps, 100_000);

        let c2 = preset("case2").unwrap();
        assert_eq!(c2.mass_spring.m, 10.0);
        assert_eq!(c2.mass_spring.k, 20.0);
        assert_eq!(c2.gas.n0, 2.0);
        assert_eq!(c2.gas.v0, 9.9775e-2);
        assert_eq!(c2.init.x0, 0.1);

        assert!(preset("case3").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let config = preset("case1").unwrap();
        let text = config.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.mass_spring.m, config.mass_spring.m);
        assert_eq!(back.gas.r, DEFAULT_R);
        assert_eq!(back.init.x1, config.init.x1);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut config = preset("case1").unwrap();
        config.scheme = 4;
        assert!(config.validate().is_err());

        let mut config = preset("case1").unwrap();
        config.h = 0.0;
        assert!(config.validate().is_err());

        let mut config = preset("case1").unwrap();
        config.schema_version = 99;
        assert!(config.validate().is_err());

        let mut config = preset("case1").unwrap();
        config.mass_spring.lambda = -1.0;
        assert!(config.validate().is_err());

        assert!(RunConfig::from_toml_str("schema_version = 1").is_err());
        assert!(RunConfig::from_toml_str("not toml at all [").is_err());
    }
}
