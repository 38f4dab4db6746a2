//! Fixed-timestep plant: PV array, DC link, averaged DC-AC converter, breaker
//! and R/L load, plus the offline and real-time runners that drive it.

mod config;
mod load;
mod model;
mod runner;

pub use config::{Pacing, SimConfig};
pub use load::{load_command_to_impedance, Impedance, LoadCommand, LoadError};
pub use model::{CommandError, Plant, PlantCommand, PlantFlags, PlantState};
pub use runner::{plant_channels, CommandEnvelope, PacingReport, PlantInputs, PlantLink, Runner, TelemetrySink};

use thiserror::Error;

use crate::pv::PvError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Pv(#[from] PvError),
    #[error(transparent)]
    Load(#[from] LoadError),
}
