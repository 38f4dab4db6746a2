//! Telemetry snapshots and their on-disk formats.
//!
//! A [`TelemetrySample`] is published after every simulation step; every
//! `telemetry_decimation`-th one is streamed and persisted. Files are either
//! JSON lines or CSV with the fixed column order of [`CSV_COLUMNS`].

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::control::BreakerPosition;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounters {
    pub insolation_count: u64,
    pub temperature_count: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFlags {
    /// DC link below 10% of its reference.
    pub undervoltage: bool,
    /// More than half the ticks in the last second missed their deadline.
    pub degraded_realtime: bool,
    /// The PV solve of this step hit its iteration cap.
    pub solver_substituted: bool,
    /// A telemetry write failed during a real-time run.
    pub persist_failed: bool,
}

/// Snapshot of the plant after one step.
///
/// `p_ac` is the converter output energy-averaged over the step and
/// `p_curtailed` the PV power held back to keep the DC link at its
/// reference; the load-side quantities reflect the breaker position at the
/// end of the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySample {
    pub t_sim: f64,
    /// Unix seconds; absent in offline runs so that output stays reproducible.
    pub wall_clock: Option<f64>,
    pub v_dc: f64,
    pub pv_v: f64,
    pub pv_i: f64,
    pub pv_p: f64,
    pub insolation: f64,
    pub temperature: f64,
    pub load_p_setpoint: f64,
    pub load_p_actual: f64,
    pub ac_vrms: f64,
    pub load_i_rms: f64,
    pub p_ac: f64,
    pub p_curtailed: f64,
    pub breaker_position: BreakerPosition,
    pub fault_active: bool,
    pub counters: SampleCounters,
    pub flags: SampleFlags,
}

/// CSV header, in the field order of [`TelemetrySample`] with the nested
/// counters and flags flattened.
pub const CSV_COLUMNS: [&str; 22] = [
    "t_sim",
    "wall_clock",
    "v_dc",
    "pv_v",
    "pv_i",
    "pv_p",
    "insolation",
    "temperature",
    "load_p_setpoint",
    "load_p_actual",
    "ac_vrms",
    "load_i_rms",
    "p_ac",
    "p_curtailed",
    "breaker_position",
    "fault_active",
    "insolation_count",
    "temperature_count",
    "undervoltage",
    "degraded_realtime",
    "solver_substituted",
    "persist_failed",
];

impl TelemetrySample {
    pub fn csv_row(&self) -> String {
        let wall = self.wall_clock.map(|w| w.to_string()).unwrap_or_default();
        let fields: [String; 22] = [
            self.t_sim.to_string(),
            wall,
            self.v_dc.to_string(),
            self.pv_v.to_string(),
            self.pv_i.to_string(),
            self.pv_p.to_string(),
            self.insolation.to_string(),
            self.temperature.to_string(),
            self.load_p_setpoint.to_string(),
            self.load_p_actual.to_string(),
            self.ac_vrms.to_string(),
            self.load_i_rms.to_string(),
            self.p_ac.to_string(),
            self.p_curtailed.to_string(),
            self.breaker_position.as_str().to_string(),
            self.fault_active.to_string(),
            self.counters.insolation_count.to_string(),
            self.counters.temperature_count.to_string(),
            self.flags.undervoltage.to_string(),
            self.flags.degraded_realtime.to_string(),
            self.flags.solver_substituted.to_string(),
            self.flags.persist_failed.to_string(),
        ];
        fields.join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TelemetryFormat {
    Jsonl,
    Csv,
}

impl TelemetryFormat {
    /// Picks CSV for a `.csv` extension, JSON lines otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TelemetryFormat::Csv,
            _ => TelemetryFormat::Jsonl,
        }
    }
}

impl FromStr for TelemetryFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(TelemetryFormat::Jsonl),
            "csv" => Ok(TelemetryFormat::Csv),
            other => Err(format!("unknown telemetry format {other:?} (expected jsonl or csv)")),
        }
    }
}

const FLUSH_INTERVAL: Duration = Duration::from_secs(1);

/// Appends samples to a file, flushing at least once per second so the file
/// can be read while a run is in progress.
pub struct TelemetryWriter<W: Write = File> {
    out: BufWriter<W>,
    format: TelemetryFormat,
    last_flush: Instant,
    written: u64,
}

impl TelemetryWriter<File> {
    pub fn create(path: &Path, format: TelemetryFormat) -> io::Result<Self> {
        Self::new(File::create(path)?, format)
    }
}

impl<W: Write> TelemetryWriter<W> {
    pub fn new(inner: W, format: TelemetryFormat) -> io::Result<Self> {
        let mut out = BufWriter::new(inner);
        if format == TelemetryFormat::Csv {
            writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        }
        Ok(Self { out, format, last_flush: Instant::now(), written: 0 })
    }

    pub fn write(&mut self, sample: &TelemetrySample) -> io::Result<()> {
        match self.format {
            TelemetryFormat::Jsonl => {
                serde_json::to_writer(&mut self.out, sample)?;
                self.out.write_all(b"\n")?;
            }
            TelemetryFormat::Csv => writeln!(self.out, "{}", sample.csv_row())?,
        }
        self.written += 1;
        if self.last_flush.elapsed() >= FLUSH_INTERVAL {
            self.out.flush()?;
            self.last_flush = Instant::now();
        }
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| e.into_error())
    }
}

#[cfg(test)]
pub(crate) fn sample_at(t: f64) -> TelemetrySample {
    TelemetrySample {
        t_sim: t,
        wall_clock: None,
        v_dc: 48.0,
        pv_v: 30.0,
        pv_i: 8.0,
        pv_p: 240.0,
        insolation: 1000.0,
        temperature: 25.0,
        load_p_setpoint: 30.0,
        load_p_actual: 30.0,
        ac_vrms: 120.0,
        load_i_rms: 0.25,
        p_ac: 30.0,
        p_curtailed: 208.75,
        breaker_position: BreakerPosition::Closed,
        fault_active: false,
        counters: SampleCounters { insolation_count: 3, temperature_count: 4 },
        flags: SampleFlags::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_has_one_parseable_line_per_sample() {
        let mut w = TelemetryWriter::new(Vec::new(), TelemetryFormat::Jsonl).unwrap();
        for k in 0..100 {
            w.write(&sample_at(f64::from(k) * 0.05)).unwrap();
        }
        let bytes = w.finish().unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 100);
        for (k, line) in lines.iter().enumerate() {
            let s: TelemetrySample = serde_json::from_str(line).unwrap();
            assert_eq!(s, sample_at(k as f64 * 0.05));
        }
    }

    #[test]
    fn csv_header_follows_field_order() {
        let w = TelemetryWriter::new(Vec::new(), TelemetryFormat::Csv).unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        assert_eq!(text.trim_end(), CSV_COLUMNS.join(","));

        // The JSON key order, with the nested group names dropped, is the
        // same column order.
        let json = serde_json::to_string(&sample_at(0.0)).unwrap();
        let keys: Vec<&str> = json
            .split('"')
            .collect::<Vec<_>>()
            .windows(2)
            .filter(|w| w[1].starts_with(':'))
            .map(|w| w[0])
            .filter(|k| *k != "counters" && *k != "flags")
            .collect();
        assert_eq!(keys, CSV_COLUMNS);
    }

    #[test]
    fn csv_rows_match_column_count() {
        let row = sample_at(1.0).csv_row();
        assert_eq!(row.split(',').count(), CSV_COLUMNS.len());
        assert!(row.starts_with("1,,48,"));
        assert!(row.contains(",CLOSED,false,3,4,"));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(TelemetryFormat::from_path(Path::new("a/b.CSV")), TelemetryFormat::Csv);
        assert_eq!(TelemetryFormat::from_path(Path::new("a/b.jsonl")), TelemetryFormat::Jsonl);
        assert_eq!("csv".parse::<TelemetryFormat>(), Ok(TelemetryFormat::Csv));
        assert!("xml".parse::<TelemetryFormat>().is_err());
    }
}
