//! Sensor gateway: fixed-layout binary frames over TCP.

mod codec;
mod counters;
mod schema;
mod server;

use thiserror::Error;

pub use codec::{decode_packet, encode_packet, FrameDecoder, SktPacket, SktWord};
pub use counters::{ClientStats, CountersSnapshot, IngestCounters, VariableCount, RATE_WINDOW};
pub use schema::{ByteOrder, SktVariable, SktVariableSchema, Target, WordKind};
pub use server::{serve, EnvSink, GatewayConfig, GatewayHandle, DEFAULT_SKT_PORT};

#[derive(Debug, Error)]
pub enum SktError {
    #[error("expected {expected} values, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("value {value} at index {index} is not representable as a finite FLOAT32")]
    NonFinite { index: usize, value: f64 },
    #[error("value {value} at index {index} is not an INT32")]
    NotAnInt32 { index: usize, value: f64 },
    #[error("NaN at index {index}")]
    NotANumber { index: usize },
    #[error("frame is {got} bytes, expected {expected}")]
    FrameLength { expected: usize, got: usize },
    #[error("stream ended with {leftover} bytes of a {frame_len}-byte frame")]
    MalformedFrame { leftover: usize, frame_len: usize },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("invalid role header: {0}")]
    Role(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PartialEq for SktError {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Io(a), Self::Io(b)) => a.kind() == b.kind(),
            _ => self.to_string() == other.to_string() && std::mem::discriminant(self) == std::mem::discriminant(other),
        }
    }
}
