use serde::{Deserialize, Serialize};

use super::{ControlError, TIME_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BreakerPosition {
    Closed,
    Open,
    Tripped,
}

impl BreakerPosition {
    pub fn as_str(self) -> &'static str {
        match self {
            BreakerPosition::Closed => "CLOSED",
            BreakerPosition::Open => "OPEN",
            BreakerPosition::Tripped => "TRIPPED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BreakerCommand {
    Open,
    Close,
    Reset,
    /// Protection trip issued by fault control.
    Trip,
}

/// Breaker with definite-time overcurrent protection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakerState {
    pub position: BreakerPosition,
    /// A
    pub trip_threshold: f64,
    /// Seconds of sustained overcurrent before tripping.
    pub trip_delay: f64,
    /// Simulation time at which the current overcurrent episode began.
    pub overcurrent_since: Option<f64>,
}

impl BreakerState {
    pub fn closed(trip_threshold: f64, trip_delay: f64) -> Self {
        Self {
            position: BreakerPosition::Closed,
            trip_threshold,
            trip_delay,
            overcurrent_since: None,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.position == BreakerPosition::Closed
    }

    /// Applies an operator or protection command.
    ///
    /// Closing is refused while tripped (reset first) and while a fault is
    /// active; both leave the state untouched.
    pub fn command(&self, cmd: BreakerCommand, fault_active: bool) -> Result<Self, ControlError> {
        use BreakerPosition::*;
        let mut next = *self;
        match (cmd, self.position) {
            (BreakerCommand::Open, Closed) => {
                next.position = Open;
                next.overcurrent_since = None;
            }
            (BreakerCommand::Open, _) => {}
            (BreakerCommand::Close, Tripped) => {
                return Err(ControlError::IllegalTransition("close while tripped requires a reset first"));
            }
            (BreakerCommand::Close, _) if fault_active => {
                return Err(ControlError::IllegalTransition("close refused while a fault is active"));
            }
            (BreakerCommand::Close, Open) => next.position = Closed,
            (BreakerCommand::Close, Closed) => {}
            (BreakerCommand::Reset, Tripped) => next.position = Open,
            (BreakerCommand::Reset, _) => {}
            (BreakerCommand::Trip, Tripped) => {}
            (BreakerCommand::Trip, _) => {
                next.position = Tripped;
                next.overcurrent_since = None;
            }
        }
        Ok(next)
    }
}

/// Protection update with the current measured through the breaker at `now`.
///
/// A closed breaker trips once the current has stayed above the threshold for
/// at least `trip_delay`. Open and tripped breakers are unaffected.
pub fn breaker_update(state: &BreakerState, measured_current: f64, now: f64) -> BreakerState {
    let mut next = *state;
    if state.position != BreakerPosition::Closed {
        next.overcurrent_since = None;
        return next;
    }
    if measured_current.abs() > state.trip_threshold {
        let since = *next.overcurrent_since.get_or_insert(now);
        if now - since >= state.trip_delay - TIME_EPS {
            next.position = BreakerPosition::Tripped;
            next.overcurrent_since = None;
        }
    } else {
        next.overcurrent_since = None;
    }
    next
}
