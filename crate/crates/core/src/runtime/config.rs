use std::net::SocketAddr;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RuntimeError;
use crate::plant::SimConfig;
use crate::pv::{fit_diode_params, PvModuleParams};
use crate::skt::GatewayConfig;

pub const DEFAULT_API_PORT: u16 = 8080;
pub const SKT_PORT_ENV: &str = "PVTWIN_SKT_PORT";
pub const API_PORT_ENV: &str = "PVTWIN_API_PORT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApiConfig {
    pub bind: SocketAddr,
    /// Samples per I-V curve served by `/ivcurve`.
    pub ivcurve_points: usize,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self { bind: SocketAddr::from(([0, 0, 0, 0], DEFAULT_API_PORT)), ivcurve_points: 101 }
    }
}

/// Everything a plant process needs, read from one TOML file.
///
/// ```toml
/// fit = true
///
/// [pv]
/// isc_stc = 8.6
///
/// [sim]
/// load_max_w = 30.0
///
/// [gateway]
/// bind = "0.0.0.0:4575"
///
/// [api]
/// bind = "0.0.0.0:8080"
/// ```
///
/// Missing keys take their defaults; unknown keys are errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    /// Fit `r_series`/`r_shunt` to the datasheet points before running.
    pub fit: bool,
    pub pv: PvModuleParams,
    pub sim: SimConfig,
    pub gateway: GatewayConfig,
    pub api: ApiConfig,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            fit: true,
            pv: PvModuleParams::default(),
            sim: SimConfig::default(),
            gateway: GatewayConfig::default(),
            api: ApiConfig::default(),
        }
    }
}

impl PlantConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RuntimeError> {
        let config: Self = toml::from_str(text).map_err(|e| RuntimeError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String, RuntimeError> {
        toml::to_string(self).map_err(|e| RuntimeError::Config(e.to_string()))
    }

    /// Reads the file and applies the port overrides from the environment.
    pub fn load(path: &Path) -> Result<Self, RuntimeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RuntimeError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        config.apply_env_overrides(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    /// `PVTWIN_SKT_PORT` and `PVTWIN_API_PORT` replace the bind ports. Nothing
    /// else can be overridden from the environment.
    pub fn apply_env_overrides(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), RuntimeError> {
        for (key, addr) in [(SKT_PORT_ENV, &mut self.gateway.bind), (API_PORT_ENV, &mut self.api.bind)] {
            if let Some(raw) = lookup(key) {
                let port = raw
                    .trim()
                    .parse::<u16>()
                    .map_err(|_| RuntimeError::Config(format!("{key}={raw:?} is not a port number")))?;
                addr.set_port(port);
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), RuntimeError> {
        self.pv.validate()?;
        self.sim.validate()?;
        if self.api.ivcurve_points < 2 {
            return Err(RuntimeError::Config("api.ivcurve_points must be at least 2".into()));
        }
        Ok(())
    }

    /// Module parameters the plant runs with: fitted when `fit` is set.
    pub fn model_params(&self) -> Result<PvModuleParams, RuntimeError> {
        if self.fit {
            Ok(fit_diode_params(&self.pv)?)
        } else {
            Ok(self.pv.clone())
        }
    }

    /// The configuration actually in force, with any fit already applied and
    /// `fit` cleared. Loading the result and taking its effective config again
    /// gives the same value.
    pub fn effective(&self) -> Result<Self, RuntimeError> {
        Ok(Self { fit: false, pv: self.model_params()?, ..self.clone() })
    }
}
