use std::collections::{HashMap, VecDeque};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{SktVariableSchema, Target};
use crate::telemetry::SampleCounters;

/// Length of the sliding window used for per-client rates.
pub const RATE_WINDOW: Duration = Duration::from_secs(10);

#[derive(Debug)]
struct ClientWindow {
    first_seen: Instant,
    arrivals: VecDeque<Instant>,
    packets: u64,
    connected: bool,
}

impl ClientWindow {
    fn prune(&mut self, now: Instant) {
        while let Some(&front) = self.arrivals.front() {
            if now.saturating_duration_since(front) > RATE_WINDOW {
                self.arrivals.pop_front();
            } else {
                break;
            }
        }
    }

    /// Packets per second over the window, or over the client's lifetime
    /// while that is shorter (floored at one second).
    fn rate(&mut self, now: Instant) -> f64 {
        self.prune(now);
        let span = now.saturating_duration_since(self.first_seen).min(RATE_WINDOW).as_secs_f64().max(1.0);
        self.arrivals.len() as f64 / span
    }
}

/// Gateway ingest statistics, shared between connection tasks and readers.
#[derive(Debug)]
pub struct IngestCounters {
    names: Vec<String>,
    per_variable: Vec<AtomicU64>,
    insolation: Option<usize>,
    temperature: Option<usize>,
    packets: AtomicU64,
    dropped: AtomicU64,
    malformed: AtomicU64,
    clients: Mutex<HashMap<SocketAddr, ClientWindow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableCount {
    pub name: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClientStats {
    pub addr: String,
    pub packets: u64,
    pub rate_hz: f64,
    pub connected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountersSnapshot {
    pub insolation_count: u64,
    pub temperature_count: u64,
    pub variables: Vec<VariableCount>,
    pub packets: u64,
    pub dropped: u64,
    pub malformed: u64,
    pub clients: Vec<ClientStats>,
}

impl IngestCounters {
    pub fn new(schema: &SktVariableSchema) -> Self {
        Self {
            names: schema.variables().iter().map(|v| v.name.clone()).collect(),
            per_variable: schema.variables().iter().map(|_| AtomicU64::new(0)).collect(),
            insolation: schema.index_of(Target::Insolation),
            temperature: schema.index_of(Target::Temperature),
            packets: AtomicU64::new(0),
            dropped: AtomicU64::new(0),
            malformed: AtomicU64::new(0),
            clients: Mutex::new(HashMap::new()),
        }
    }

    pub fn client_connected(&self, addr: SocketAddr, now: Instant) {
        let mut clients = self.clients.lock().expect("counters lock");
        let entry = clients.entry(addr).or_insert_with(|| ClientWindow {
            first_seen: now,
            arrivals: VecDeque::new(),
            packets: 0,
            connected: true,
        });
        entry.connected = true;
    }

    pub fn client_disconnected(&self, addr: SocketAddr) {
        if let Some(c) = self.clients.lock().expect("counters lock").get_mut(&addr) {
            c.connected = false;
        }
    }

    /// Records one accepted packet; `applied` lists the variable indices whose
    /// values reached the plant.
    pub fn record_packet(&self, addr: SocketAddr, applied: &[usize], now: Instant) {
        self.packets.fetch_add(1, Ordering::Relaxed);
        for &i in applied {
            if let Some(c) = self.per_variable.get(i) {
                c.fetch_add(1, Ordering::Relaxed);
            }
        }
        let mut clients = self.clients.lock().expect("counters lock");
        let entry = clients.entry(addr).or_insert_with(|| ClientWindow {
            first_seen: now,
            arrivals: VecDeque::new(),
            packets: 0,
            connected: true,
        });
        entry.packets += 1;
        entry.arrivals.push_back(now);
        entry.prune(now);
    }

    pub fn record_dropped(&self) {
        self.dropped.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_malformed(&self) {
        self.malformed.fetch_add(1, Ordering::Relaxed);
    }

    fn count_of(&self, index: Option<usize>) -> u64 {
        index.map_or(0, |i| self.per_variable[i].load(Ordering::Relaxed))
    }

    pub fn sample_counters(&self) -> SampleCounters {
        SampleCounters {
            insolation_count: self.count_of(self.insolation),
            temperature_count: self.count_of(self.temperature),
        }
    }

    pub fn packets(&self) -> u64 {
        self.packets.load(Ordering::Relaxed)
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }

    pub fn malformed(&self) -> u64 {
        self.malformed.load(Ordering::Relaxed)
    }

    pub fn client_rate(&self, addr: SocketAddr, now: Instant) -> Option<f64> {
        self.clients.lock().expect("counters lock").get_mut(&addr).map(|c| c.rate(now))
    }

    pub fn snapshot(&self, now: Instant) -> CountersSnapshot {
        let mut clients: Vec<ClientStats> = self
            .clients
            .lock()
            .expect("counters lock")
            .iter_mut()
            .map(|(addr, c)| ClientStats {
                addr: addr.to_string(),
                packets: c.packets,
                rate_hz: c.rate(now),
                connected: c.connected,
            })
            .collect();
        clients.sort_by(|a, b| a.addr.cmp(&b.addr));
        let sc = self.sample_counters();
        CountersSnapshot {
            insolation_count: sc.insolation_count,
            temperature_count: sc.temperature_count,
            variables: self
                .names
                .iter()
                .zip(&self.per_variable)
                .map(|(name, c)| VariableCount { name: name.clone(), count: c.load(Ordering::Relaxed) })
                .collect(),
            packets: self.packets(),
            dropped: self.dropped(),
            malformed: self.malformed(),
            clients,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr() -> SocketAddr {
        "127.0.0.1:5000".parse().unwrap()
    }

    #[test]
    fn per_variable_counts() {
        let c = IngestCounters::new(&SktVariableSchema::default());
        let t0 = Instant::now();
        c.record_packet(addr(), &[0, 1], t0);
        c.record_packet(addr(), &[0], t0);
        assert_eq!(c.sample_counters(), SampleCounters { insolation_count: 2, temperature_count: 1 });
        assert_eq!(c.packets(), 2);
        c.record_dropped();
        c.record_malformed();
        let snap = c.snapshot(t0);
        assert_eq!((snap.dropped, snap.malformed), (1, 1));
        assert_eq!(snap.variables[1], VariableCount { name: "f_python1".into(), count: 1 });
    }

    #[test]
    fn rate_uses_sliding_window() {
        let c = IngestCounters::new(&SktVariableSchema::default());
        let t0 = Instant::now();
        c.client_connected(addr(), t0);
        // 10 Hz for 20 s.
        for k in 1..=200u64 {
            c.record_packet(addr(), &[0, 1], t0 + Duration::from_millis(100 * k));
        }
        let rate = c.client_rate(addr(), t0 + Duration::from_secs(20)).unwrap();
        assert!((rate - 10.0).abs() < 0.2, "{rate}");
        // Two seconds in, the rate is over the two seconds seen so far.
        let c = IngestCounters::new(&SktVariableSchema::default());
        c.client_connected(addr(), t0);
        for k in 1..=20u64 {
            c.record_packet(addr(), &[0], t0 + Duration::from_millis(100 * k));
        }
        let rate = c.client_rate(addr(), t0 + Duration::from_secs(2)).unwrap();
        assert!((rate - 10.0).abs() < 1e-9, "{rate}");
    }

    #[test]
    fn disconnect_keeps_history() {
        let c = IngestCounters::new(&SktVariableSchema::default());
        let t0 = Instant::now();
        c.record_packet(addr(), &[0], t0);
        c.client_disconnected(addr());
        let snap = c.snapshot(t0);
        assert_eq!(snap.clients.len(), 1);
        assert!(!snap.clients[0].connected);
        assert_eq!(snap.clients[0].packets, 1);
    }
}
