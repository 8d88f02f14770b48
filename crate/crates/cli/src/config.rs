//! JSON run configuration.
//!
//! Required keys are `p`, `n_cells`, `t_end`, `ic.family` and `ic.mass`;
//! everything else has a default. Unknown keys are rejected.

use std::path::PathBuf;

use ks1d::grid::make_grid;
use ks1d::models::DEFAULT_QUADRATURE_TOL;
use ks1d::{
    DiffusionModel, Dynamics, Error, FluxScheme, Forcing, InitialCondition, Profile, Scenario, StepControl, V0Mode,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Samples per run when `sample_interval` is omitted.
pub const DEFAULT_SAMPLES: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    pub n_cells: usize,
    pub t_end: f64,
    /// Defaults to `t_end / 100`.
    #[serde(default)]
    pub sample_interval: Option<f64>,
    pub ic: IcConfig,
    #[serde(default)]
    pub control: ControlConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub forcing: Forcing,
    #[serde(default)]
    pub flux: FluxScheme,
    #[serde(default = "default_quadrature_tol")]
    pub quadrature_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Constant,
    Cosine,
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcConfig {
    pub family: Family,
    pub mass: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_center")]
    pub center: f64,
    #[serde(default)]
    pub v0_mode: V0Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    pub cfl_safety: f64,
    pub rel_tol: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub u_max_threshold: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        let c = StepControl::<f64>::default();
        Self {
            cfl_safety: c.cfl_safety,
            rel_tol: c.rel_tol,
            dt_min: c.dt_min,
            dt_max: c.dt_max,
            u_max_threshold: c.u_max_threshold,
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("ks1d_out")
}

fn default_quadrature_tol() -> f64 {
    DEFAULT_QUADRATURE_TOL
}

fn default_amplitude() -> f64 {
    0.5
}

fn default_width() -> f64 {
    0.1
}

fn default_center() -> f64 {
    0.5
}

/// Parses and validates a configuration, filling in defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            CliError::Config(e.inner().to_string())
        } else {
            CliError::Config(format!("at `{path}`: {}", e.inner()))
        }
    })?;
    config.sample_interval.get_or_insert(config.t_end / DEFAULT_SAMPLES);
    config.validate()?;
    Ok(config)
}

fn invalid(prefix: &str, err: Error) -> CliError {
    match err {
        Error::InvalidParameter { key, reason } => CliError::Config(format!("invalid `{prefix}{key}`: {reason}")),
        other => CliError::Config(other.to_string()),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        DiffusionModel::new(self.p, self.quadrature_tol).map_err(|e| invalid("", e))?;
        make_grid::<f64>(self.n_cells).map_err(|e| CliError::Config(format!("invalid `n_cells`: {e}")))?;
        self.initial_condition().validate().map_err(|e| invalid("ic.", e))?;
        self.step_control().validate().map_err(|e| invalid("control.", e))?;
        self.scenario().validate().map_err(|e| invalid("", e))
    }

    pub fn initial_condition(&self) -> InitialCondition<f64> {
        let ic = &self.ic;
        let profile = match ic.family {
            Family::Constant => Profile::Constant,
            Family::Cosine => Profile::Cosine {
                amplitude: ic.amplitude,
            },
            Family::Bump => Profile::Bump {
                width: ic.width,
                center: ic.center,
            },
        };
        InitialCondition::new(profile, ic.mass).with_v0_mode(ic.v0_mode)
    }

    pub fn step_control(&self) -> StepControl<f64> {
        let c = &self.control;
        StepControl {
            cfl_safety: c.cfl_safety,
            rel_tol: c.rel_tol,
            dt_min: c.dt_min,
            dt_max: c.dt_max,
            u_max_threshold: c.u_max_threshold,
        }
    }

    pub fn scenario(&self) -> Scenario<f64> {
        let mut s = Scenario::new(
            self.p,
            self.n_cells,
            self.t_end,
            self.sample_interval.unwrap_or(self.t_end / DEFAULT_SAMPLES),
            self.initial_condition(),
        );
        s.quadrature_tol = self.quadrature_tol;
        s.control = self.step_control();
        s.dynamics = Dynamics::new(self.flux, self.forcing);
        s
    }

    /// Same configuration with another exponent and mass.
    pub fn with_cell(&self, p: f64, mass: f64) -> Self {
        let mut c = self.clone();
        c.p = p;
        c.ic.mass = mass;
        c
    }
}
