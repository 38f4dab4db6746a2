use std::path::{Path, PathBuf};

use serde::Serialize;

use super::scenario::{EventCursor, ScenarioScript};
use super::service::{apply_due_events, Service, ServiceOptions};
use super::{PlantConfig, RuntimeError};
use crate::control::BreakerPosition;
use crate::plant::{PacingReport, Pacing, Plant, Runner};
use crate::telemetry::{TelemetryFormat, TelemetrySample, TelemetryWriter};

/// Steady-state means over the latter half of one script segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentSummary {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
    pub mean_insolation: f64,
    pub mean_temperature: f64,
    pub mean_pv_v: f64,
    pub mean_pv_i: f64,
    pub mean_pv_p: f64,
    pub mean_v_dc: f64,
    pub mean_load_p_actual: f64,
    pub mean_ac_vrms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub mode: Pacing,
    pub steps: u64,
    pub samples: usize,
    pub telemetry: Option<PathBuf>,
    pub segments: Vec<SegmentSummary>,
    pub rejected_events: Vec<String>,
    pub final_breaker: BreakerPosition,
    pub pacing: Option<PacingReport>,
}

impl ScenarioSummary {
    /// `(last - first) / first` of a per-segment mean.
    pub fn relative_change(&self, field: impl Fn(&SegmentSummary) -> f64) -> Option<f64> {
        let first = field(self.segments.first()?);
        let last = field(self.segments.last()?);
        (first != 0.0).then(|| (last - first) / first)
    }
}

/// Per-segment means of `samples`, using samples with `t_sim` in the latter
/// half `(mid, end]` of each segment.
pub fn summarize(samples: &[TelemetrySample], bounds: &[f64]) -> Vec<SegmentSummary> {
    bounds
        .windows(2)
        .map(|w| {
            let (start, end) = (w[0], w[1]);
            let mid = start + 0.5 * (end - start);
            let sel: Vec<&TelemetrySample> =
                samples.iter().filter(|s| s.t_sim > mid + 1e-12 && s.t_sim <= end + 1e-12).collect();
            let n = sel.len();
            let mean = |f: fn(&TelemetrySample) -> f64| {
                if n == 0 {
                    f64::NAN
                } else {
                    sel.iter().map(|s| f(s)).sum::<f64>() / n as f64
                }
            };
            SegmentSummary {
                start,
                end,
                samples: n,
                mean_insolation: mean(|s| s.insolation),
                mean_temperature: mean(|s| s.temperature),
                mean_pv_v: mean(|s| s.pv_v),
                mean_pv_i: mean(|s| s.pv_i),
                mean_pv_p: mean(|s| s.pv_p),
                mean_v_dc: mean(|s| s.v_dc),
                mean_load_p_actual: mean(|s| s.load_p_actual),
                mean_ac_vrms: mean(|s| s.ac_vrms),
            }
        })
        .collect()
}

/// Runs a script and returns per-segment means.
///
/// `Offline` applies events directly and steps as fast as possible with no
/// network listeners; the telemetry file is a pure function of the script
/// and configuration. `Realtime` starts the sensor gateway and operator API
/// from `config`, paces steps against the wall clock, and layers the
/// scripted events over live sensor input.
pub fn run_scenario(
    script: &ScenarioScript,
    config: &PlantConfig,
    mode: Pacing,
    out: Option<&Path>,
) -> Result<ScenarioSummary, RuntimeError> {
    config.validate()?;
    let steps = script.steps(config.sim.dt);
    let bounds = script.segment_bounds();
    match mode {
        Pacing::Offline => {
            let plant = Plant::new(config.model_params()?, config.sim.clone())?;
            let mut runner = Runner::new(plant);
            let mut cursor = EventCursor::new(script, config.sim.dt);
            let mut rejected = Vec::new();
            let writer = match out {
                Some(path) => Some(TelemetryWriter::create(path, TelemetryFormat::from_path(path))?),
                None => None,
            };
            let mut sink = (writer, Vec::new());
            runner.run_offline(steps, &mut sink, |plant| apply_due_events(&mut cursor, plant, &mut rejected))?;
            let (writer, samples) = sink;
            if let Some(w) = writer {
                w.finish()?;
            }
            Ok(ScenarioSummary {
                mode,
                steps,
                samples: samples.len(),
                telemetry: out.map(Path::to_path_buf),
                segments: summarize(&samples, &bounds),
                rejected_events: rejected,
                final_breaker: runner.plant().state().breaker.position,
                pacing: None,
            })
        }
        Pacing::Realtime => {
            let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
            let options = ServiceOptions {
                script: Some(script.clone()),
                max_steps: Some(steps),
                out: out.map(Path::to_path_buf),
                keep_samples: true,
            };
            let outcome = rt.block_on(async {
                let service = Service::start(config, options).await?;
                tracing::info!(skt = %service.skt_addr(), api = %service.api_addr(), "real-time scenario running");
                service.wait().await
            })?;
            Ok(ScenarioSummary {
                mode,
                steps: outcome.report.steps,
                samples: outcome.samples.len(),
                telemetry: out.map(Path::to_path_buf),
                segments: summarize(&outcome.samples, &bounds),
                rejected_events: outcome.rejected_events,
                final_breaker: outcome.plant.state().breaker.position,
                pacing: Some(outcome.report),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::bundled_scenario;

    #[test]
    fn empty_script_one_second_offline() {
        let script = ScenarioScript::parse("duration 1\n").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let s = run_scenario(&script, &PlantConfig::default(), Pacing::Offline, Some(&path)).unwrap();
        assert_eq!(s.steps, 1000);
        assert_eq!(s.samples, 1000 / 50);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 20);
    }

    #[test]
    fn insolation_step_raises_current() {
        let s = run_scenario(&bundled_scenario("insolation-step").unwrap(), &PlantConfig::default(), Pacing::Offline, None)
            .unwrap();
        assert_eq!(s.segments.len(), 2);
        assert!(s.segments[1].mean_pv_i > s.segments[0].mean_pv_i);
        assert!(s.rejected_events.is_empty());
    }

    #[test]
    fn fault_trip_recovers() {
        let s =
            run_scenario(&bundled_scenario("fault-trip").unwrap(), &PlantConfig::default(), Pacing::Offline, None).unwrap();
        assert!(s.rejected_events.is_empty(), "{:?}", s.rejected_events);
        assert_eq!(s.final_breaker, BreakerPosition::Closed);
        // The segment holding the fault has a dead PCC once tripped.
        assert_eq!(s.segments[1].mean_load_p_actual, 0.0);
        assert!((s.segments.last().unwrap().mean_load_p_actual - 30.0).abs() < 0.5);
    }

    #[test]
    fn summary_means_use_latter_half() {
        use crate::telemetry::sample_at;
        let samples: Vec<_> = (1..=10)
            .map(|k| {
                let mut s = sample_at(f64::from(k));
                s.pv_i = f64::from(k);
                s
            })
            .collect();
        let seg = summarize(&samples, &[0.0, 10.0]);
        // t in (5, 10]: 6..=10.
        assert_eq!(seg[0].samples, 5);
        assert_eq!(seg[0].mean_pv_i, 8.0);
    }
}
