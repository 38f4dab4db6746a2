use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::control::{BreakerCommand, FaultCommand};
use crate::plant::{LoadCommand, PlantCommand};
use crate::pv::EnvUpdate;

/// One scripted action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioEvent {
    SetInsolation { value: f64 },
    SetTemperature { value: f64 },
    SetLoad { p_setpoint: f64, power_factor: f64 },
    Breaker { action: BreakerCommand },
    Fault { action: FaultCommand },
}

impl ScenarioEvent {
    pub fn as_env_update(&self) -> Option<EnvUpdate> {
        match *self {
            ScenarioEvent::SetInsolation { value } => Some(EnvUpdate::insolation(value)),
            ScenarioEvent::SetTemperature { value } => Some(EnvUpdate::temperature(value)),
            _ => None,
        }
    }

    pub fn as_command(&self) -> Option<PlantCommand> {
        match *self {
            ScenarioEvent::SetLoad { p_setpoint, power_factor } => {
                Some(PlantCommand::SetLoad(LoadCommand { p_setpoint, power_factor }))
            }
            ScenarioEvent::Breaker { action } => Some(PlantCommand::Breaker { action }),
            ScenarioEvent::Fault { action } => Some(PlantCommand::Fault { action }),
            _ => None,
        }
    }
}

impl fmt::Display for ScenarioEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioEvent::SetInsolation { value } => write!(f, "set_insolation {value}"),
            ScenarioEvent::SetTemperature { value } => write!(f, "set_temperature {value}"),
            ScenarioEvent::SetLoad { p_setpoint, power_factor } => write!(f, "set_load {p_setpoint} {power_factor}"),
            ScenarioEvent::Breaker { action } => {
                let name = match action {
                    BreakerCommand::Open => "open",
                    BreakerCommand::Close => "close",
                    BreakerCommand::Reset => "reset",
                    BreakerCommand::Trip => "trip",
                };
                write!(f, "breaker_{name}")
            }
            ScenarioEvent::Fault { action: FaultCommand::Inject } => f.write_str("fault_inject"),
            ScenarioEvent::Fault { action: FaultCommand::Clear } => f.write_str("fault_clear"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimedEvent {
    /// Seconds of simulated time.
    pub at: f64,
    pub event: ScenarioEvent,
}

/// Timed events over a fixed duration. No randomness: the same script on the
/// same configuration always produces the same run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioScript {
    pub duration: f64,
    pub events: Vec<TimedEvent>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError { line, message: message.into() }
}

fn number(line: usize, what: &str, tok: Option<&str>) -> Result<f64, ScenarioError> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    let v: f64 = tok.parse().map_err(|_| err(line, format!("{what} {tok:?} is not a number")))?;
    if !v.is_finite() {
        return Err(err(line, format!("{what} must be finite")));
    }
    Ok(v)
}

impl ScenarioScript {
    /// Parses the line format:
    ///
    /// ```text
    /// # comment
    /// duration 10
    /// at 0 set_insolation 500
    /// at 5 set_insolation 1000
    /// at 6 set_load 20 0.95
    /// at 7 fault_inject
    /// ```
    ///
    /// Events are `set_insolation W/m2`, `set_temperature C`,
    /// `set_load W [pf]`, `breaker_open`, `breaker_close`, `breaker_reset`,
    /// `fault_inject`, `fault_clear`. Times must not decrease and must not
    /// exceed the duration.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut duration: Option<(f64, usize)> = None;
        let mut events: Vec<(TimedEvent, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut toks = content.split_whitespace();
            match toks.next() {
                Some("duration") => {
                    if duration.is_some() {
                        return Err(err(line, "duration given twice"));
                    }
                    let d = number(line, "duration", toks.next())?;
                    if d <= 0.0 {
                        return Err(err(line, "duration must be positive"));
                    }
                    duration = Some((d, line));
                }
                Some("at") => {
                    let at = number(line, "time", toks.next())?;
                    if at < 0.0 {
                        return Err(err(line, "event time must not be negative"));
                    }
                    let name = toks.next().ok_or_else(|| err(line, "missing event name"))?;
                    let event = match name {
                        "set_insolation" => ScenarioEvent::SetInsolation { value: number(line, "insolation", toks.next())? },
                        "set_temperature" => {
                            ScenarioEvent::SetTemperature { value: number(line, "temperature", toks.next())? }
                        }
                        "set_load" => {
                            let p_setpoint = number(line, "load power", toks.next())?;
                            let power_factor = match toks.next() {
                                Some(t) => number(line, "power factor", Some(t))?,
                                None => 1.0,
                            };
                            if !(power_factor > 0.0 && power_factor <= 1.0) {
                                return Err(err(line, "power factor must be in (0, 1]"));
                            }
                            ScenarioEvent::SetLoad { p_setpoint, power_factor }
                        }
                        "breaker_open" => ScenarioEvent::Breaker { action: BreakerCommand::Open },
                        "breaker_close" => ScenarioEvent::Breaker { action: BreakerCommand::Close },
                        "breaker_reset" => ScenarioEvent::Breaker { action: BreakerCommand::Reset },
                        "fault_inject" => ScenarioEvent::Fault { action: FaultCommand::Inject },
                        "fault_clear" => ScenarioEvent::Fault { action: FaultCommand::Clear },
                        other => return Err(err(line, format!("unknown event {other:?}"))),
                    };
                    if let Some((prev, _)) = events.last() {
                        if at < prev.at {
                            return Err(err(line, format!("event time {at} is before the previous event at {}", prev.at)));
                        }
                    }
                    events.push((TimedEvent { at, event }, line));
                }
                Some(other) => return Err(err(line, format!("unknown directive {other:?}"))),
                None => unreachable!("blank lines are skipped"),
            }
            if let Some(extra) = toks.next() {
                return Err(err(line, format!("unexpected trailing {extra:?}")));
            }
        }
        let (duration, _) = duration.ok_or_else(|| err(text.lines().count().max(1), "missing duration"))?;
        if let Some((e, line)) = events.iter().find(|(e, _)| e.at > duration) {
            return Err(err(*line, format!("event at {} is after the end of the run ({duration})", e.at)));
        }
        Ok(Self { duration, events: events.into_iter().map(|(e, _)| e).collect() })
    }

    /// Segment boundaries: start, each distinct event time strictly inside
    /// the run, end.
    pub fn segment_bounds(&self) -> Vec<f64> {
        let mut b = vec![0.0];
        for e in &self.events {
            if e.at > *b.last().unwrap() && e.at < self.duration {
                b.push(e.at);
            }
        }
        b.push(self.duration);
        b
    }

    /// Number of plant steps covering the duration at step size `dt`.
    pub fn steps(&self, dt: f64) -> u64 {
        (self.duration / dt).round() as u64
    }
}

impl FromStr for ScenarioScript {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for ScenarioScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "duration {}", self.duration)?;
        for e in &self.events {
            writeln!(f, "at {} {}", e.at, e.event)?;
        }
        Ok(())
    }
}

/// Scripts shipped with the crate, by name.
pub const BUNDLED_SCENARIOS: [(&str, &str); 4] = [
    ("insolation-step", include_str!("../../scenarios/insolation-step.scn")),
    ("temperature-step", include_str!("../../scenarios/temperature-step.scn")),
    ("load-sweep", include_str!("../../scenarios/load-sweep.scn")),
    ("fault-trip", include_str!("../../scenarios/fault-trip.scn")),
];

pub fn bundled_scenario(name: &str) -> Option<ScenarioScript> {
    BUNDLED_SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ScenarioScript::parse(text).expect("bundled scenario parses"))
}

/// Hands out scripted events as simulated time reaches them. Events are
/// keyed to step indices, so release does not depend on float comparisons
/// of accumulated time.
#[derive(Debug, Clone)]
pub struct EventCursor {
    events: Vec<(u64, ScenarioEvent)>,
    next: usize,
}

impl EventCursor {
    pub fn new(script: &ScenarioScript, dt: f64) -> Self {
        Self { events: script.events.iter().map(|e| ((e.at / dt).round() as u64, e.event)).collect(), next: 0 }
    }

    /// Events due at or before step `step`, in script order.
    pub fn due(&mut self, step: u64) -> &[(u64, ScenarioEvent)] {
        let start = self.next;
        while self.next < self.events.len() && self.events[self.next].0 <= step {
            self.next += 1;
        }
        &self.events[start..self.next]
    }

    pub fn remaining(&self) -> usize {
        self.events.len() - self.next
    }
}
