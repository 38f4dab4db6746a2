use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Operator load setpoint: real power and power factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadCommand {
    /// Watts.
    pub p_setpoint: f64,
    pub power_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("load setpoint {got} W outside the allowed range [{min}, {max}] W")]
    OutOfRange { got: f64, min: f64, max: f64 },
    #[error("power factor {0} outside (0, 1]")]
    PowerFactor(f64),
}

impl LoadCommand {
    pub fn new(p_setpoint: f64, power_factor: f64, range: (f64, f64)) -> Result<Self, LoadError> {
        let (min, max) = range;
        if !(p_setpoint >= min && p_setpoint <= max) {
            return Err(LoadError::OutOfRange { got: p_setpoint, min, max });
        }
        if !(power_factor > 0.0 && power_factor <= 1.0) {
            return Err(LoadError::PowerFactor(power_factor));
        }
        Ok(Self { p_setpoint, power_factor })
    }
}

/// Series R/L branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impedance {
    pub r: f64,
    pub x: f64,
}

impl Impedance {
    pub fn magnitude_sq(&self) -> f64 {
        self.r * self.r + self.x * self.x
    }

    /// `(G, B)` of `1 / (r + jx)`.
    pub fn admittance(&self) -> (f64, f64) {
        let m = self.magnitude_sq();
        (self.r / m, -self.x / m)
    }

    /// Real power drawn at `vrms`.
    pub fn power_at(&self, vrms: f64) -> f64 {
        vrms * vrms * self.r / self.magnitude_sq()
    }
}

/// R/L impedance that draws exactly `p_setpoint` at the given bus voltage:
/// `S = P/pf`, `|Z| = V²/S`, `R = |Z|·pf`, `X = |Z|·sin(acos pf)`.
pub fn load_command_to_impedance(cmd: &LoadCommand, ac_vrms_nominal: f64) -> Impedance {
    let s = cmd.p_setpoint / cmd.power_factor;
    let z = ac_vrms_nominal * ac_vrms_nominal / s;
    let pf = cmd.power_factor;
    Impedance { r: z * pf, x: z * (1.0 - pf * pf).max(0.0).sqrt() }
}
