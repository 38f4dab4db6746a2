use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use super::api::{serve_operator_api, ApiHandle, ApiState};
use super::hub::{telemetry_hub, TelemetryHub};
use super::scenario::{EventCursor, ScenarioScript};
use super::{PlantConfig, RuntimeError};
use crate::plant::{plant_channels, PacingReport, Plant, PlantLink, Runner};
use crate::skt::{self, GatewayHandle, IngestCounters};
use crate::telemetry::{TelemetryFormat, TelemetrySample, TelemetryWriter};

#[derive(Debug, Clone, Default)]
pub struct ServiceOptions {
    /// Scripted events applied on top of live inputs.
    pub script: Option<ScenarioScript>,
    /// Stop after this many steps; run until shut down when `None`.
    pub max_steps: Option<u64>,
    /// Telemetry file; format follows the extension.
    pub out: Option<PathBuf>,
    /// Keep emitted samples in memory for the outcome.
    pub keep_samples: bool,
}

/// What the stepper thread hands back when it stops.
#[derive(Debug)]
pub struct StepperOutcome {
    pub report: PacingReport,
    pub samples: Vec<TelemetrySample>,
    pub plant: Plant,
    pub rejected_events: Vec<String>,
}

/// A running plant with its sensor gateway and operator API.
pub struct Service {
    stop: Arc<AtomicBool>,
    stepper: JoinHandle<StepperOutcome>,
    gateway: GatewayHandle,
    api: ApiHandle,
    link: PlantLink,
    hub: TelemetryHub,
    counters: Arc<IngestCounters>,
}

/// Applies every scripted event due at the plant's current step.
pub(crate) fn apply_due_events(cursor: &mut EventCursor, plant: &mut Plant, rejected: &mut Vec<String>) {
    let step = plant.steps();
    for &(_, event) in cursor.due(step) {
        if let Some(update) = event.as_env_update() {
            plant.apply_env(update);
        } else if let Some(command) = event.as_command() {
            if let Err(e) = plant.apply_command(&command) {
                tracing::warn!(%event, error = %e, "scripted event rejected");
                rejected.push(format!("t={}: {event}: {e}", plant.state().t_sim));
            }
        }
    }
}

impl Service {
    /// Fits the model, binds both listeners, and starts the paced stepper on
    /// its own thread. Must be called inside a multi-threaded tokio runtime.
    pub async fn start(config: &PlantConfig, options: ServiceOptions) -> Result<Self, RuntimeError> {
        config.validate()?;
        let params = config.model_params()?;
        let plant = Plant::new(params.clone(), config.sim.clone())?;
        let counters = Arc::new(IngestCounters::new(&config.gateway.schema));
        let (link, inputs) = plant_channels();
        let (hub_sink, hub) = telemetry_hub();

        let writer = match &options.out {
            Some(path) => Some(TelemetryWriter::create(path, TelemetryFormat::from_path(path))?),
            None => None,
        };

        let gateway = skt::serve(config.gateway.clone(), link.clone(), counters.clone()).await?;
        let api_state = ApiState::new(
            hub.clone(),
            Some(link.clone()),
            counters.clone(),
            params,
            config.api.ivcurve_points,
            (config.sim.load_min_w, config.sim.load_max_w),
        );
        let api = match serve_operator_api(config.api.bind, api_state).await {
            Ok(api) => api,
            Err(e) => {
                gateway.shutdown().await;
                return Err(e);
            }
        };

        let stop = Arc::new(AtomicBool::new(false));
        let thread_stop = stop.clone();
        let dt = config.sim.dt;
        let runner = Runner::new(plant).with_inputs(inputs).with_counters(counters.clone());
        let stepper = std::thread::Builder::new()
            .name("plant-stepper".into())
            .spawn(move || {
                let mut runner = runner;
                let mut cursor = options.script.as_ref().map(|s| EventCursor::new(s, dt));
                let mut rejected = Vec::new();
                let kept: Option<Vec<TelemetrySample>> = options.keep_samples.then(Vec::new);
                let mut sink = ((hub_sink, writer), kept);
                let report = runner.run_paced(&thread_stop, options.max_steps, &mut sink, |plant| {
                    if let Some(cursor) = cursor.as_mut() {
                        apply_due_events(cursor, plant, &mut rejected);
                    }
                });
                let ((_, writer), kept) = sink;
                if let Some(w) = writer {
                    if let Err(e) = w.finish() {
                        tracing::warn!(error = %e, "telemetry file did not close cleanly");
                    }
                }
                StepperOutcome { report, samples: kept.unwrap_or_default(), plant: runner.into_plant(), rejected_events: rejected }
            })?;

        Ok(Self { stop, stepper, gateway, api, link, hub, counters })
    }

    pub fn skt_addr(&self) -> SocketAddr {
        self.gateway.local_addr()
    }

    pub fn api_addr(&self) -> SocketAddr {
        self.api.local_addr()
    }

    pub fn link(&self) -> &PlantLink {
        &self.link
    }

    pub fn hub(&self) -> &TelemetryHub {
        &self.hub
    }

    pub fn counters(&self) -> &Arc<IngestCounters> {
        &self.counters
    }

    pub fn is_finished(&self) -> bool {
        self.stepper.is_finished()
    }

    /// Waits for the stepper to stop on its own (`max_steps`), then closes
    /// the listeners.
    pub async fn wait(self) -> Result<StepperOutcome, RuntimeError> {
        let Self { stepper, gateway, api, .. } = self;
        let outcome = tokio::task::spawn_blocking(move || stepper.join())
            .await
            .map_err(|e| RuntimeError::Service(e.to_string()))?
            .map_err(|_| RuntimeError::Service("plant stepper panicked".into()))?;
        api.shutdown().await;
        gateway.shutdown().await;
        Ok(outcome)
    }

    /// Stops the stepper at the next tick and closes the listeners.
    pub async fn shutdown(self) -> Result<StepperOutcome, RuntimeError> {
        self.stop.store(true, Ordering::Relaxed);
        self.wait().await
    }
}
