//! JSON scenario files.
//!
//! ```json
//! {
//!   "domain": "unit_disk",
//!   "vortices": [{"x": -0.5, "y": 0.0, "degree": 1}, {"x": 0.5, "y": 0.0, "degree": 1}],
//!   "epsilon": 0.1, "r0": 0.3, "n_modes": 64, "dt": 0.001, "t_max": 1.0,
//!   "grid": {"n_r": 256, "n_theta": 512}, "rho_min": 0.001
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::model::{Degree, PolarGrid, Vec2, VortexConfiguration};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexSpec {
    pub x: f64,
    pub y: f64,
    pub degree: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_theta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub domain: String,
    pub vortices: Vec<VortexSpec>,
    pub epsilon: f64,
    pub r0: f64,
    pub n_modes: usize,
    pub dt: f64,
    pub t_max: f64,
    pub grid: GridSpec,
    pub rho_min: f64,
}

fn field_error(path: &str, message: impl Into<String>) -> Error {
    Error::ConfigParse { path: path.to_string(), message: message.into() }
}

impl ScenarioConfig {
    /// Parses and validates; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            field_error(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`; errors are prefixed with the file name.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::ConfigParse { path: field, message } => Error::ConfigParse {
                path: format!("{}: {field}", path.display()),
                message,
            },
            other => Error::ConfigParse { path: path.display().to_string(), message: other.to_string() },
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.domain != "unit_disk" {
            return Err(field_error("domain", format!("expected \"unit_disk\", got {:?}", self.domain)));
        }
        for (j, v) in self.vortices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite()) || v.x.hypot(v.y) >= 1.0 {
                return Err(field_error(
                    &format!("vortices[{j}]"),
                    format!("({}, {}) is not inside the open unit disk", v.x, v.y),
                ));
            }
            Degree::try_from(v.degree)
                .map_err(|e| field_error(&format!("vortices[{j}].degree"), e.to_string()))?;
        }
        for (name, value) in [
            ("epsilon", self.epsilon),
            ("r0", self.r0),
            ("dt", self.dt),
            ("t_max", self.t_max),
            ("rho_min", self.rho_min),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(field_error(name, format!("must be positive, got {value}")));
            }
        }
        if self.n_modes == 0 {
            return Err(field_error("n_modes", "must be positive"));
        }
        PolarGrid::new(self.grid.n_r, self.grid.n_theta).map_err(|e| field_error("grid", e.to_string()))?;
        self.configuration().map_err(|e| field_error("vortices", e.to_string()))?;
        Ok(())
    }

    pub fn configuration(&self) -> Result<VortexConfiguration> {
        let positions = self.vortices.iter().map(|v| Vec2::new(v.x, v.y)).collect();
        let degrees = self
            .vortices
            .iter()
            .map(|v| Degree::try_from(v.degree))
            .collect::<Result<_>>()?;
        VortexConfiguration::new(positions, degrees)
    }

    pub fn polar_grid(&self) -> Result<PolarGrid> {
        PolarGrid::new(self.grid.n_r, self.grid.n_theta)
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig { dt: self.dt, t_max: self.t_max, n_modes: self.n_modes, rho_min: self.rho_min }
    }
}
