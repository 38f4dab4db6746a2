//! Desk-scale real-time photovoltaic plant twin.
//!
//! A single-diode PV array feeds a DC link and an averaged DC-AC converter
//! that supplies a dynamic R/L load through a protected breaker. Insolation
//! and cell temperature arrive from remote sensor boards over a fixed-layout
//! TCP socket protocol, and an HTTP/WebSocket operator API exposes live
//! telemetry plus load, breaker, and fault controls.
//!
//! Module map:
//!
//! - [`pv`]: single-diode module/array physics, datasheet fitting, I-V curves,
//!   brute-force maximum power point search.
//! - [`control`]: perturb-and-observe MPPT, breaker state machine, fault injector.
//! - [`plant`]: fixed-timestep plant model, load mapping, paced and offline runners.
//! - [`skt`]: socket packet codec, stream framing, ingestion counters, TCP gateway.
//! - [`telemetry`]: telemetry samples and JSONL/CSV persistence.
//! - [`runtime`]: configuration, scenario scripts, operator API, service wiring.
//!
//! The `examples/` directory of this crate has one runnable program per
//! capability; `cargo run --example iv_curves` is a good first stop.

// Negated float comparisons are how NaN gets rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod plant;
pub mod pv;
pub mod runtime;
pub mod skt;
pub mod telemetry;
