//! Process composition: configuration, scenario scripts, the operator API,
//! and the service that runs the plant with its network front ends.

pub mod api;
mod config;
mod curves;
mod hub;
mod run;
mod scenario;
mod service;

use thiserror::Error;

pub use config::{ApiConfig, PlantConfig, API_PORT_ENV, DEFAULT_API_PORT, SKT_PORT_ENV};
pub use curves::{curve_table, parse_grid};
pub use hub::{telemetry_hub, HubSink, TelemetryHub, STREAM_CAPACITY};
pub use run::{run_scenario, summarize, ScenarioSummary, SegmentSummary};
pub use scenario::{
    bundled_scenario, EventCursor, ScenarioError, ScenarioEvent, ScenarioScript, TimedEvent, BUNDLED_SCENARIOS,
};
pub use service::{Service, ServiceOptions, StepperOutcome};

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("scenario {0}")]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Plant(#[from] crate::plant::PlantError),
    #[error(transparent)]
    Pv(#[from] crate::pv::PvError),
    #[error(transparent)]
    Skt(#[from] crate::skt::SktError),
    #[error("service: {0}")]
    Service(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
