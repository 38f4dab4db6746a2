use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use super::{load_command_to_impedance, LoadCommand, LoadError, PlantError, SimConfig};
use crate::control::{
    breaker_update, fault_apply, BreakerCommand, BreakerState, ControlError, FaultCommand, FaultState, MpptState,
};
use crate::pv::{array_current, array_open_circuit_voltage, EnvInput, EnvUpdate, PvModuleParams};
use crate::telemetry::{SampleCounters, SampleFlags, TelemetrySample};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantFlags {
    pub undervoltage: bool,
    pub solver_substituted: bool,
    pub degraded_realtime: bool,
    pub persist_failed: bool,
}

/// Complete simulator state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub t_sim: f64,
    pub v_dc: f64,
    pub pv_v: f64,
    pub pv_i: f64,
    pub pv_p: f64,
    pub env: EnvInput,
    pub load: LoadCommand,
    pub load_r: f64,
    pub load_x: f64,
    pub breaker: BreakerState,
    pub fault: FaultState,
    pub mppt: MpptState,
    /// PCC voltage; zero while the breaker is not closed.
    pub ac_vrms: f64,
    /// Current through the breaker, load plus fault branch.
    pub load_i_rms: f64,
    /// Real power in the load branch.
    pub load_p: f64,
    /// Converter AC output averaged over the last step.
    pub p_ac: f64,
    /// PV power held back to keep the DC link at its reference.
    pub p_curtailed: f64,
    pub flags: PlantFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlantCommand {
    SetLoad(LoadCommand),
    Breaker { action: BreakerCommand },
    Fault { action: FaultCommand },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Breaker(#[from] ControlError),
    #[error("command rejected: {0}")]
    Rejected(String),
}

/// PV array, DC link, averaged converter, breaker, and R/L load stepped at a
/// fixed `dt`.
///
/// The array is held at the MPPT voltage by a lossless front end that feeds
/// the DC link. The converter draws the PCC power from the link; while the
/// link sits at its reference any PV surplus is curtailed. The link is
/// integrated in energy form, `E += dt * (p_in - p_ac / efficiency)`, so the
/// capacitor energy balance holds exactly for the applied powers.
#[derive(Debug, Clone)]
pub struct Plant {
    params: PvModuleParams,
    config: SimConfig,
    state: PlantState,
    steps: u64,
}

impl Plant {
    pub fn new(params: PvModuleParams, config: SimConfig) -> Result<Self, PlantError> {
        params.validate()?;
        config.validate()?;
        let env = EnvInput::new(config.initial_insolation, config.initial_temperature);
        let load = LoadCommand::new(
            config.initial_load_w,
            config.initial_power_factor,
            (config.load_min_w, config.load_max_w),
        )?;
        let z = load_command_to_impedance(&load, config.ac_vrms_nominal);

        let v_max = array_open_circuit_voltage(&EnvInput::new(1600.0, -40.0), &params)?;
        let v_start = (params.vmp_stc * params.series_modules()).min(v_max);
        let pv_i = array_current(v_start, &env, &params).unwrap_or(0.0).max(0.0);

        let state = PlantState {
            t_sim: 0.0,
            v_dc: config.v_dc_ref,
            pv_v: v_start,
            pv_i,
            pv_p: v_start * pv_i,
            env,
            load,
            load_r: z.r,
            load_x: z.x,
            breaker: BreakerState::closed(config.effective_trip_threshold(), config.trip_delay),
            fault: FaultState::new(config.fault_impedance, config.fault_auto_clear),
            mppt: MpptState::new(v_start, config.mppt_step, v_max),
            ac_vrms: config.ac_vrms_nominal,
            load_i_rms: config.ac_vrms_nominal / z.magnitude_sq().sqrt(),
            load_p: z.power_at(config.ac_vrms_nominal),
            p_ac: 0.0,
            p_curtailed: 0.0,
            flags: PlantFlags::default(),
        };
        Ok(Self { params, config, state, steps: 0 })
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn params(&self) -> &PvModuleParams {
        &self.params
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn load_range(&self) -> (f64, f64) {
        (self.config.load_min_w, self.config.load_max_w)
    }

    /// Starts from a partially charged (or overcharged) DC link.
    pub fn with_initial_v_dc(mut self, v_dc: f64) -> Self {
        self.state.v_dc = v_dc.max(0.0);
        self
    }

    pub fn with_mppt(mut self, mppt: MpptState) -> Self {
        self.state.mppt = mppt;
        self
    }

    pub fn set_degraded_realtime(&mut self, degraded: bool) {
        self.state.flags.degraded_realtime = degraded;
    }

    pub fn set_persist_failed(&mut self, failed: bool) {
        self.state.flags.persist_failed = failed;
    }

    /// Latest-value-wins sensor update, stamped with the simulation clock.
    pub fn apply_env(&mut self, update: EnvUpdate) {
        let now = self.state.t_sim;
        self.state.env.apply(update, now);
    }

    pub fn apply_command(&mut self, command: &PlantCommand) -> Result<(), CommandError> {
        let s = &mut self.state;
        match *command {
            PlantCommand::SetLoad(cmd) => {
                let load = LoadCommand::new(
                    cmd.p_setpoint,
                    cmd.power_factor,
                    (self.config.load_min_w, self.config.load_max_w),
                )?;
                let z = load_command_to_impedance(&load, self.config.ac_vrms_nominal);
                s.load = load;
                s.load_r = z.r;
                s.load_x = z.x;
            }
            PlantCommand::Breaker { action } => {
                s.breaker = s.breaker.command(action, s.fault.active)?;
            }
            PlantCommand::Fault { action } => {
                s.fault = fault_apply(&s.fault, action, s.t_sim);
            }
        }
        Ok(())
    }

    /// Advances the plant by one `dt`.
    pub fn step(&mut self) {
        let cfg = &self.config;
        let dt = cfg.dt;
        let s = &mut self.state;
        let now = s.t_sim;

        s.fault = s.fault.expire(now);

        if self.steps > 0 && self.steps.is_multiple_of(u64::from(cfg.mppt_period)) {
            s.mppt = s.mppt.pno_step(s.pv_p);
        }

        let (pv_i, substituted) = match array_current(s.mppt.v_ref, &s.env, &self.params) {
            Ok(i) => (i, false),
            Err(err) => {
                warn!(t = now, v = s.mppt.v_ref, %err, "PV solve substituted bracketed value");
                (err.substitute().unwrap_or(0.0), true)
            }
        };
        // The front end blocks reverse current above Voc.
        s.pv_v = s.mppt.v_ref;
        s.pv_i = pv_i.max(0.0);
        s.pv_p = s.pv_v * s.pv_i;

        let z = load_command_to_impedance(&s.load, cfg.ac_vrms_nominal);
        s.load_r = z.r;
        s.load_x = z.x;
        let (g_load, b_load) = z.admittance();
        let g_bus = g_load + s.fault.conductance();
        let y_bus = g_bus.hypot(b_load);

        let closed = s.breaker.is_closed();
        let v_nom = cfg.ac_vrms_nominal;
        let eff = cfg.converter_efficiency;
        let p_demand = if closed { v_nom * v_nom * g_bus } else { 0.0 };

        // Curtail the PV feed so the link does not rise above its reference.
        let energy = 0.5 * cfg.c_dc * s.v_dc * s.v_dc;
        let energy_ref = 0.5 * cfg.c_dc * cfg.v_dc_ref * cfg.v_dc_ref;
        let p_limit = (p_demand / eff + (energy_ref - energy) / dt).max(0.0);
        let p_in = s.pv_p.min(p_limit);
        let available = energy + dt * p_in;

        // A link that cannot cover the demand sags the AC bus; with a fixed
        // impedance the delivered power scales with V².
        let (p_ac, v_ac) = if p_demand <= 0.0 {
            (0.0, if closed { v_nom } else { 0.0 })
        } else if p_demand / eff * dt <= available {
            (p_demand, v_nom)
        } else {
            let p = eff * available / dt;
            (p, v_nom * (p / p_demand).sqrt())
        };
        let energy_next = (available - dt * p_ac / eff).max(0.0);
        s.v_dc = (2.0 * energy_next / cfg.c_dc).sqrt();
        s.p_ac = p_ac;
        s.p_curtailed = s.pv_p - p_in;

        let bus_current = v_ac * y_bus;
        s.breaker = breaker_update(&s.breaker, if closed { bus_current } else { 0.0 }, now);
        if s.breaker.is_closed() {
            s.ac_vrms = v_ac;
            s.load_i_rms = bus_current;
            s.load_p = v_ac * v_ac * g_load;
        } else {
            s.ac_vrms = 0.0;
            s.load_i_rms = 0.0;
            s.load_p = 0.0;
        }

        s.flags.undervoltage = s.v_dc < cfg.undervoltage_fraction * cfg.v_dc_ref;
        s.flags.solver_substituted = substituted;

        self.steps += 1;
        s.t_sim = self.steps as f64 * dt;
    }

    pub fn sample(&self, wall_clock: Option<f64>, counters: SampleCounters) -> TelemetrySample {
        let s = &self.state;
        TelemetrySample {
            t_sim: s.t_sim,
            wall_clock,
            v_dc: s.v_dc,
            pv_v: s.pv_v,
            pv_i: s.pv_i,
            pv_p: s.pv_p,
            insolation: s.env.insolation,
            temperature: s.env.temperature,
            load_p_setpoint: s.load.p_setpoint,
            load_p_actual: s.load_p,
            ac_vrms: s.ac_vrms,
            load_i_rms: s.load_i_rms,
            p_ac: s.p_ac,
            p_curtailed: s.p_curtailed,
            breaker_position: s.breaker.position,
            fault_active: s.fault.active,
            counters,
            flags: SampleFlags {
                undervoltage: s.flags.undervoltage,
                degraded_realtime: s.flags.degraded_realtime,
                solver_substituted: s.flags.solver_substituted,
                persist_failed: s.flags.persist_failed,
            },
        }
    }
}
