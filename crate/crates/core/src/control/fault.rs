use serde::{Deserialize, Serialize};

use super::TIME_EPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultCommand {
    Inject,
    Clear,
}

/// Shunt fault at the point of common coupling, in parallel with the load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultState {
    pub active: bool,
    /// Ohms, > 0.
    pub fault_impedance: f64,
    pub started_at: Option<f64>,
    /// Seconds after injection at which the fault clears itself.
    pub auto_clear_after: Option<f64>,
}

impl FaultState {
    pub fn new(fault_impedance: f64, auto_clear_after: Option<f64>) -> Self {
        assert!(fault_impedance > 0.0, "fault impedance must be positive");
        Self { active: false, fault_impedance, started_at: None, auto_clear_after }
    }

    /// Clears the fault once its auto-clear window has elapsed.
    pub fn expire(&self, now: f64) -> Self {
        match (self.active, self.started_at, self.auto_clear_after) {
            (true, Some(start), Some(after)) if now - start >= after - TIME_EPS => fault_apply(self, FaultCommand::Clear, now),
            _ => *self,
        }
    }

    /// Shunt conductance contributed at the PCC, siemens.
    pub fn conductance(&self) -> f64 {
        if self.active {
            1.0 / self.fault_impedance
        } else {
            0.0
        }
    }
}

/// Idempotent inject/clear.
pub fn fault_apply(state: &FaultState, command: FaultCommand, now: f64) -> FaultState {
    match (command, state.active) {
        (FaultCommand::Inject, false) => FaultState { active: true, started_at: Some(now), ..*state },
        (FaultCommand::Clear, true) => FaultState { active: false, started_at: None, ..*state },
        _ => *state,
    }
}
