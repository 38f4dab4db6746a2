use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::PvError;

/// Accepted irradiance range in W/m². Sensor values outside are clamped.
pub const INSOLATION_RANGE: RangeInclusive<f64> = 0.0..=1600.0;
/// Accepted cell temperature range in °C. Sensor values outside are clamped.
pub const TEMPERATURE_RANGE: RangeInclusive<f64> = -40.0..=90.0;

/// Datasheet and diode-model parameters of one module, plus array counts.
///
/// `r_series` and `r_shunt` start as datasheet guesses; [`super::fit_diode_params`]
/// replaces them with values that reproduce the STC operating points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvModuleParams {
    pub isc_stc: f64,
    pub voc_stc: f64,
    pub vmp_stc: f64,
    pub imp_stc: f64,
    /// A/°C
    pub alpha_isc: f64,
    /// V/°C
    pub beta_voc: f64,
    pub n_cells_series: u32,
    pub diode_ideality: f64,
    pub r_series: f64,
    pub r_shunt: f64,
    pub n_series_modules: u32,
    pub n_parallel_strings: u32,
    pub g_ref: f64,
    pub t_ref: f64,
}

impl Default for PvModuleParams {
    /// Generic 60-cell, ~240 W silicon module, single module array.
    fn default() -> Self {
        Self {
            isc_stc: 8.6,
            voc_stc: 37.2,
            vmp_stc: 30.0,
            imp_stc: 8.0,
            alpha_isc: 0.004,
            beta_voc: -0.11,
            n_cells_series: 60,
            diode_ideality: 1.3,
            r_series: 0.35,
            r_shunt: 300.0,
            n_series_modules: 1,
            n_parallel_strings: 1,
            g_ref: 1000.0,
            t_ref: 25.0,
        }
    }
}

impl PvModuleParams {
    pub fn validate(&self) -> Result<(), PvError> {
        let fail = |msg: &str| Err(PvError::InvalidParams(msg.to_string()));
        let finite = [
            self.isc_stc,
            self.voc_stc,
            self.vmp_stc,
            self.imp_stc,
            self.alpha_isc,
            self.beta_voc,
            self.diode_ideality,
            self.r_series,
            self.r_shunt,
            self.g_ref,
            self.t_ref,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return fail("all parameters must be finite");
        }
        if !(self.isc_stc > self.imp_stc && self.imp_stc > 0.0) {
            return fail("require isc_stc > imp_stc > 0");
        }
        if !(self.voc_stc > self.vmp_stc && self.vmp_stc > 0.0) {
            return fail("require voc_stc > vmp_stc > 0");
        }
        if self.r_series < 0.0 {
            return fail("r_series must be >= 0");
        }
        if self.r_shunt <= 0.0 {
            return fail("r_shunt must be > 0");
        }
        if !(1.0..=2.0).contains(&self.diode_ideality) {
            return fail("diode_ideality must lie in [1, 2]");
        }
        if self.n_cells_series == 0 || self.n_series_modules == 0 || self.n_parallel_strings == 0 {
            return fail("cell and array counts must be >= 1");
        }
        if self.g_ref <= 0.0 {
            return fail("g_ref must be > 0");
        }
        let t_hot = *TEMPERATURE_RANGE.end();
        if self.voc_stc + self.beta_voc * (t_hot - self.t_ref) <= 0.0 {
            return fail("beta_voc drives open-circuit voltage to zero inside the temperature range");
        }
        Ok(())
    }

    pub fn with_array(mut self, n_series_modules: u32, n_parallel_strings: u32) -> Self {
        self.n_series_modules = n_series_modules;
        self.n_parallel_strings = n_parallel_strings;
        self
    }

    pub fn series_modules(&self) -> f64 {
        f64::from(self.n_series_modules)
    }

    pub fn parallel_strings(&self) -> f64 {
        f64::from(self.n_parallel_strings)
    }
}

/// Latest environmental inputs seen by the plant (INSOL1, TEMP1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvInput {
    /// W/m²
    pub insolation: f64,
    /// Cell temperature, °C.
    pub temperature: f64,
    /// Simulation-clock seconds at which the values were applied.
    pub received_at: f64,
}

impl EnvInput {
    /// Builds a clamped input. NaN maps to the low end of the range.
    pub fn new(insolation: f64, temperature: f64) -> Self {
        Self {
            insolation: clamp_range(insolation, &INSOLATION_RANGE),
            temperature: clamp_range(temperature, &TEMPERATURE_RANGE),
            received_at: 0.0,
        }
    }

    pub fn stc() -> Self {
        Self::new(1000.0, 25.0)
    }

    /// Latest-value-wins merge of a sensor update.
    pub fn apply(&mut self, update: EnvUpdate, now: f64) {
        if let Some(g) = update.insolation {
            self.insolation = clamp_range(g, &INSOLATION_RANGE);
        }
        if let Some(t) = update.temperature {
            self.temperature = clamp_range(t, &TEMPERATURE_RANGE);
        }
        if update.insolation.is_some() || update.temperature.is_some() {
            self.received_at = now;
        }
    }
}

/// One decoded sensor packet. Both fields travel together so the stepper
/// never sees half of a packet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvUpdate {
    pub insolation: Option<f64>,
    pub temperature: Option<f64>,
}

impl EnvUpdate {
    pub fn insolation(g: f64) -> Self {
        Self { insolation: Some(g), temperature: None }
    }

    pub fn temperature(t: f64) -> Self {
        Self { insolation: None, temperature: Some(t) }
    }
}

fn clamp_range(x: f64, range: &RangeInclusive<f64>) -> f64 {
    if x.is_nan() {
        return *range.start();
    }
    x.clamp(*range.start(), *range.end())
}
