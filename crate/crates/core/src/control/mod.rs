//! PV control, breaker, and fault control.
//!
//! Each piece is a small value-type state machine. The simulation loop owns
//! and steps them; operator commands reach them through the loop's command
//! queue.

mod breaker;
mod fault;
mod mppt;

pub use breaker::{breaker_update, BreakerCommand, BreakerPosition, BreakerState};
pub use fault::{fault_apply, FaultCommand, FaultState};
pub use mppt::{pno_step, Direction, MpptState};

use thiserror::Error;

/// Slack when comparing elapsed simulation time against a delay, so that
/// `k * dt` sums land on the intended tick.
pub(crate) const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControlError {
    #[error("illegal breaker transition: {0}")]
    IllegalTransition(&'static str),
}
