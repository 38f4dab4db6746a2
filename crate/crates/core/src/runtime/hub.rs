use std::io;

use tokio::sync::{broadcast, watch};

use crate::plant::TelemetrySink;
use crate::telemetry::TelemetrySample;

/// Buffered emitted samples per subscriber before it starts lagging.
pub const STREAM_CAPACITY: usize = 256;

/// Stepper side: publishes every tick's snapshot and broadcasts the emitted
/// ones. Never blocks; slow subscribers lag instead.
#[derive(Debug)]
pub struct HubSink {
    latest: watch::Sender<Option<TelemetrySample>>,
    stream: broadcast::Sender<TelemetrySample>,
}

/// Reader side, cheap to clone into request handlers.
#[derive(Debug, Clone)]
pub struct TelemetryHub {
    latest: watch::Receiver<Option<TelemetrySample>>,
    stream: broadcast::Sender<TelemetrySample>,
}

pub fn telemetry_hub() -> (HubSink, TelemetryHub) {
    let (latest_tx, latest_rx) = watch::channel(None);
    let (stream, _) = broadcast::channel(STREAM_CAPACITY);
    (HubSink { latest: latest_tx, stream: stream.clone() }, TelemetryHub { latest: latest_rx, stream })
}

impl TelemetrySink for HubSink {
    fn publish(&mut self, sample: &TelemetrySample, emit: bool) -> io::Result<()> {
        self.latest.send_replace(Some(sample.clone()));
        if emit {
            // No subscribers is fine.
            let _ = self.stream.send(sample.clone());
        }
        Ok(())
    }
}

impl TelemetryHub {
    /// Snapshot of the most recent tick, if any tick has run.
    pub fn latest(&self) -> Option<TelemetrySample> {
        self.latest.borrow().clone()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<TelemetrySample> {
        self.stream.subscribe()
    }

    /// Waits until a snapshot newer than the last one seen is published.
    pub async fn changed(&mut self) -> bool {
        self.latest.changed().await.is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::sample_at;

    #[test]
    fn latest_tracks_every_tick_and_stream_only_emitted() {
        let (mut sink, hub) = telemetry_hub();
        let mut rx = hub.subscribe();
        assert!(hub.latest().is_none());
        sink.publish(&sample_at(0.001), false).unwrap();
        sink.publish(&sample_at(0.002), true).unwrap();
        sink.publish(&sample_at(0.003), false).unwrap();
        assert_eq!(hub.latest().unwrap().t_sim, 0.003);
        assert_eq!(rx.try_recv().unwrap().t_sim, 0.002);
        assert!(rx.try_recv().is_err());
    }
}
