use serde::{Deserialize, Serialize};

use super::PlantError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pacing {
    /// Steps are released against the host monotonic clock.
    Realtime,
    /// Steps run back to back; output is a pure function of the inputs.
    Offline,
}

impl std::str::FromStr for Pacing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "realtime" => Ok(Pacing::Realtime),
            "offline" => Ok(Pacing::Offline),
            other => Err(format!("unknown mode {other:?}, expected offline or realtime")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Step size, seconds.
    pub dt: f64,
    /// DC-link capacitance, farads.
    pub c_dc: f64,
    pub v_dc_ref: f64,
    pub converter_efficiency: f64,
    pub ac_vrms_nominal: f64,
    pub telemetry_decimation: u32,
    pub pacing: Pacing,
    /// Steps between MPPT updates.
    pub mppt_period: u32,
    /// MPPT voltage perturbation, volts.
    pub mppt_step: f64,
    /// Seconds of sustained overcurrent before the breaker trips.
    pub trip_delay: f64,
    /// Amps; defaults to twice the rated load current.
    pub trip_threshold: Option<f64>,
    pub fault_impedance: f64,
    pub fault_auto_clear: Option<f64>,
    /// Load slider range, watts.
    pub load_min_w: f64,
    pub load_max_w: f64,
    pub initial_load_w: f64,
    pub initial_power_factor: f64,
    pub initial_insolation: f64,
    pub initial_temperature: f64,
    /// Undervoltage flag threshold as a fraction of `v_dc_ref`.
    pub undervoltage_fraction: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.001,
            c_dc: 0.002,
            v_dc_ref: 48.0,
            converter_efficiency: 0.96,
            ac_vrms_nominal: 120.0,
            telemetry_decimation: 50,
            pacing: Pacing::Realtime,
            mppt_period: 10,
            mppt_step: 0.5,
            trip_delay: 0.050,
            trip_threshold: None,
            fault_impedance: 1.0,
            fault_auto_clear: None,
            load_min_w: 5.0,
            load_max_w: 30.0,
            initial_load_w: 15.0,
            initial_power_factor: 1.0,
            initial_insolation: 1000.0,
            initial_temperature: 25.0,
            undervoltage_fraction: 0.1,
        }
    }
}

impl SimConfig {
    pub fn offline() -> Self {
        Self { pacing: Pacing::Offline, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let bad = |m: &str| Err(PlantError::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be > 0");
        }
        if self.telemetry_decimation < 1 {
            return bad("telemetry_decimation must be >= 1");
        }
        if self.mppt_period < 1 || !(self.mppt_step > 0.0) {
            return bad("mppt_period must be >= 1 and mppt_step > 0");
        }
        if !(self.c_dc > 0.0) || !(self.v_dc_ref > 0.0) || !(self.ac_vrms_nominal > 0.0) {
            return bad("c_dc, v_dc_ref and ac_vrms_nominal must be > 0");
        }
        if !(self.converter_efficiency > 0.0 && self.converter_efficiency <= 1.0) {
            return bad("converter_efficiency must lie in (0, 1]");
        }
        if !(self.trip_delay >= 0.0) || self.trip_threshold.is_some_and(|t| !(t > 0.0)) {
            return bad("trip_delay must be >= 0 and trip_threshold > 0");
        }
        if !(self.fault_impedance > 0.0) {
            return bad("fault_impedance must be > 0");
        }
        if !(self.load_min_w > 0.0 && self.load_min_w <= self.load_max_w) {
            return bad("load range must satisfy 0 < load_min_w <= load_max_w");
        }
        if !(self.load_min_w..=self.load_max_w).contains(&self.initial_load_w) {
            return bad("initial_load_w must lie in the load range");
        }
        if !(self.initial_power_factor > 0.0 && self.initial_power_factor <= 1.0) {
            return bad("initial_power_factor must lie in (0, 1]");
        }
        Ok(())
    }

    /// Load current at the top of the slider range and unity power factor.
    pub fn rated_load_current(&self) -> f64 {
        self.load_max_w / self.ac_vrms_nominal
    }

    pub fn effective_trip_threshold(&self) -> f64 {
        self.trip_threshold.unwrap_or(2.0 * self.rated_load_current())
    }

    /// Telemetry decimation giving roughly `hz` samples per second.
    pub fn decimation_for_rate(&self, hz: f64) -> u32 {
        ((1.0 / (hz * self.dt)).round() as u32).max(1)
    }
}
