//! Single-diode photovoltaic module and array model.
//!
//! The module equation is the implicit five-parameter form
//!
//! ```text
//! I = Iph - I0 * (exp((V + I*Rs) / (n*Ns*Vt)) - 1) - (V + I*Rs) / Rsh
//! ```
//!
//! with `Vt = k*T/q` per cell. Array quantities scale ideally: voltage by the
//! number of series modules, current by the number of parallel strings.
//!
//! All functions here are pure and can be evaluated from any thread.

mod curve;
mod fit;
mod params;
mod solver;

pub use curve::{
    array_current, array_open_circuit_voltage, iv_curve, mpp_bruteforce, IvCurve, MaxPowerPoint,
    MPP_GRID_POINTS,
};
pub use fit::{fit_diode_params, FitResiduals};
pub use params::{
    EnvInput, EnvUpdate, PvModuleParams, INSOLATION_RANGE, TEMPERATURE_RANGE,
};
pub use solver::{
    current_at_voltage, current_at_voltage_with, diode_scale_voltage, open_circuit_voltage,
    photocurrent, saturation_current, thermal_voltage, DEFAULT_MAX_ITER,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PvError {
    #[error("invalid module parameters: {0}")]
    InvalidParams(String),

    /// Newton/bisection did not reach tolerance. `last` is the midpoint of
    /// the final bracket, which callers substitute after logging.
    #[error("solver did not converge after {iterations} iterations (last bracketed value {last})")]
    NonConvergence { iterations: usize, last: f64 },

    #[error("diode parameter fit failed: {0}")]
    FitFailure(FitResiduals),

    #[error("an I-V curve needs at least 2 points, got {0}")]
    TooFewPoints(usize),
}

impl PvError {
    /// Substitution value for the non-convergence policy.
    pub fn substitute(&self) -> Option<f64> {
        match self {
            PvError::NonConvergence { last, .. } => Some(*last),
            _ => None,
        }
    }
}
