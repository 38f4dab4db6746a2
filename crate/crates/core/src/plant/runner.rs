use std::collections::VecDeque;
use std::io;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use tokio::sync::oneshot;
use tracing::warn;

use super::{CommandError, Plant, PlantCommand};
use crate::pv::EnvUpdate;
use crate::skt::IngestCounters;
use crate::telemetry::{SampleCounters, TelemetrySample, TelemetryWriter};

/// An operator command with an optional reply slot for its outcome.
#[derive(Debug)]
pub struct CommandEnvelope {
    pub command: PlantCommand,
    pub reply: Option<oneshot::Sender<Result<(), CommandError>>>,
}

impl CommandEnvelope {
    pub fn fire(command: PlantCommand) -> Self {
        Self { command, reply: None }
    }

    pub fn with_reply(command: PlantCommand) -> (Self, oneshot::Receiver<Result<(), CommandError>>) {
        let (tx, rx) = oneshot::channel();
        (Self { command, reply: Some(tx) }, rx)
    }
}

/// Producer side of the plant's two ordered input queues.
#[derive(Debug, Clone)]
pub struct PlantLink {
    data: Sender<EnvUpdate>,
    commands: Sender<CommandEnvelope>,
}

impl PlantLink {
    /// Returns false once the stepper has gone away.
    pub fn send_env(&self, update: EnvUpdate) -> bool {
        self.data.send(update).is_ok()
    }

    pub fn send_command(&self, envelope: CommandEnvelope) -> bool {
        self.commands.send(envelope).is_ok()
    }

    pub fn env_sender(&self) -> Sender<EnvUpdate> {
        self.data.clone()
    }
}

/// Consumer side, drained by the stepper at the start of each tick.
#[derive(Debug)]
pub struct PlantInputs {
    data: Receiver<EnvUpdate>,
    commands: Receiver<CommandEnvelope>,
}

pub fn plant_channels() -> (PlantLink, PlantInputs) {
    let (data_tx, data_rx) = mpsc::channel();
    let (cmd_tx, cmd_rx) = mpsc::channel();
    (PlantLink { data: data_tx, commands: cmd_tx }, PlantInputs { data: data_rx, commands: cmd_rx })
}

impl PlantInputs {
    pub fn drain_into(&self, plant: &mut Plant) {
        while let Ok(update) = self.data.try_recv() {
            plant.apply_env(update);
        }
        while let Ok(envelope) = self.commands.try_recv() {
            let result = plant.apply_command(&envelope.command);
            if let Err(err) = &result {
                warn!(command = ?envelope.command, %err, "operator command rejected");
            }
            if let Some(reply) = envelope.reply {
                let _ = reply.send(result);
            }
        }
    }
}

/// Receives the snapshot published after every step. `emit` marks every
/// `telemetry_decimation`-th step, the samples that are streamed and stored.
pub trait TelemetrySink {
    fn publish(&mut self, sample: &TelemetrySample, emit: bool) -> io::Result<()>;
}

/// Collects emitted samples.
impl TelemetrySink for Vec<TelemetrySample> {
    fn publish(&mut self, sample: &TelemetrySample, emit: bool) -> io::Result<()> {
        if emit {
            self.push(sample.clone());
        }
        Ok(())
    }
}

impl<W: io::Write> TelemetrySink for TelemetryWriter<W> {
    fn publish(&mut self, sample: &TelemetrySample, emit: bool) -> io::Result<()> {
        if emit {
            self.write(sample)?;
        }
        Ok(())
    }
}

impl<A: TelemetrySink, B: TelemetrySink> TelemetrySink for (A, B) {
    fn publish(&mut self, sample: &TelemetrySample, emit: bool) -> io::Result<()> {
        // Both halves always see the sample; the first error wins.
        let a = self.0.publish(sample, emit);
        let b = self.1.publish(sample, emit);
        a.and(b)
    }
}

impl<S: TelemetrySink> TelemetrySink for Option<S> {
    fn publish(&mut self, sample: &TelemetrySample, emit: bool) -> io::Result<()> {
        match self {
            Some(s) => s.publish(sample, emit),
            None => Ok(()),
        }
    }
}

impl<S: TelemetrySink + ?Sized> TelemetrySink for &mut S {
    fn publish(&mut self, sample: &TelemetrySample, emit: bool) -> io::Result<()> {
        (**self).publish(sample, emit)
    }
}

/// Outcome of a real-time run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacingReport {
    pub steps: u64,
    /// Steps that finished after the next step's deadline.
    pub overruns: u64,
    /// Steps released more than half a tick after their deadline.
    pub late_releases: u64,
    /// Mean interval between consecutive releases, seconds.
    pub mean_period: f64,
    /// Largest release lateness seen, seconds.
    pub max_lateness: f64,
    /// Lateness of the final release relative to `t0 + k*dt`, seconds.
    pub final_lateness: f64,
    pub degraded: bool,
    pub persist_errors: u64,
}

/// Owns the plant and drives it from its input queues.
pub struct Runner {
    plant: Plant,
    inputs: Option<PlantInputs>,
    counters: Option<Arc<IngestCounters>>,
}

impl Runner {
    pub fn new(plant: Plant) -> Self {
        Self { plant, inputs: None, counters: None }
    }

    pub fn with_inputs(mut self, inputs: PlantInputs) -> Self {
        self.inputs = Some(inputs);
        self
    }

    pub fn with_counters(mut self, counters: Arc<IngestCounters>) -> Self {
        self.counters = Some(counters);
        self
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn plant_mut(&mut self) -> &mut Plant {
        &mut self.plant
    }

    pub fn into_plant(self) -> Plant {
        self.plant
    }

    fn counters(&self) -> SampleCounters {
        self.counters.as_ref().map(|c| c.sample_counters()).unwrap_or_default()
    }

    /// Hook, queue drain, step, publish.
    fn tick<S, H>(&mut self, wall_clock: Option<f64>, sink: &mut S, hook: &mut H) -> io::Result<()>
    where
        S: TelemetrySink + ?Sized,
        H: FnMut(&mut Plant),
    {
        if let Some(inputs) = &self.inputs {
            inputs.drain_into(&mut self.plant);
        }
        hook(&mut self.plant);
        self.plant.step();
        let emit = self.plant.steps().is_multiple_of(u64::from(self.plant.config().telemetry_decimation));
        let sample = self.plant.sample(wall_clock, self.counters());
        sink.publish(&sample, emit)
    }

    /// Runs `steps` steps back to back. `hook` runs at the start of every
    /// tick, after the queues are drained, and may inject scripted events.
    /// A sink error aborts the run.
    pub fn run_offline<S, H>(&mut self, steps: u64, sink: &mut S, mut hook: H) -> io::Result<u64>
    where
        S: TelemetrySink + ?Sized,
        H: FnMut(&mut Plant),
    {
        for _ in 0..steps {
            self.tick(None, sink, &mut hook)?;
        }
        Ok(steps)
    }

    /// Releases one step per `dt` against absolute deadlines `t0 + k*dt`
    /// until `stop` is raised or `max_steps` have run. Sink errors only raise
    /// the persist flag.
    pub fn run_paced<S, H>(
        &mut self,
        stop: &AtomicBool,
        max_steps: Option<u64>,
        sink: &mut S,
        mut hook: H,
    ) -> PacingReport
    where
        S: TelemetrySink + ?Sized,
        H: FnMut(&mut Plant),
    {
        let dt = Duration::from_secs_f64(self.plant.config().dt);
        let dt_s = dt.as_secs_f64();
        let window_len = ((1.0 / dt_s).round() as usize).max(1);
        let mut window: VecDeque<bool> = VecDeque::with_capacity(window_len);
        let mut late_in_window = 0usize;

        let mut report = PacingReport {
            steps: 0,
            overruns: 0,
            late_releases: 0,
            mean_period: 0.0,
            max_lateness: 0.0,
            final_lateness: 0.0,
            degraded: false,
            persist_errors: 0,
        };
        let t0 = Instant::now();
        let mut first_release = None;
        let mut last_release = t0;

        let mut k: u32 = 0;
        loop {
            if stop.load(Ordering::Relaxed) || max_steps.is_some_and(|m| report.steps >= m) {
                break;
            }
            let deadline = t0 + dt * k;
            let now = Instant::now();
            if deadline > now {
                thread::sleep(deadline - now);
            }
            let release = Instant::now();
            let lateness = release.saturating_duration_since(deadline).as_secs_f64();
            first_release.get_or_insert(release);
            last_release = release;
            report.max_lateness = report.max_lateness.max(lateness);
            report.final_lateness = lateness;

            if let Err(err) = self.tick(Some(unix_now()), sink, &mut hook) {
                report.persist_errors += 1;
                if !self.plant.state().flags.persist_failed {
                    warn!(%err, "telemetry write failed, continuing");
                }
                self.plant.set_persist_failed(true);
            }
            report.steps += 1;

            let finished = Instant::now();
            let overrun = finished > deadline + dt;
            let late_release = lateness > dt_s / 2.0;
            report.overruns += u64::from(overrun);
            report.late_releases += u64::from(late_release);

            let late = overrun || late_release;
            if window.len() == window_len && window.pop_front() == Some(true) {
                late_in_window -= 1;
            }
            window.push_back(late);
            late_in_window += usize::from(late);
            let degraded = window.len() == window_len && late_in_window * 2 > window_len;
            if degraded && !report.degraded {
                warn!("more than half of the ticks in the last second were late");
            }
            report.degraded |= degraded;
            self.plant.set_degraded_realtime(degraded);

            k += 1;
        }

        if let Some(first) = first_release {
            if report.steps > 1 {
                report.mean_period = (last_release - first).as_secs_f64() / (report.steps - 1) as f64;
            }
        }
        report
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}
