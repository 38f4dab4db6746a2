use super::{EnvInput, PvError, PvModuleParams};

const BOLTZMANN: f64 = 1.380_649e-23;
const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
const KELVIN_OFFSET: f64 = 273.15;

/// Iteration cap for the implicit solves.
pub const DEFAULT_MAX_ITER: usize = 100;

/// Thermal voltage `k*T/q` of one cell at `temperature_c`.
pub fn thermal_voltage(temperature_c: f64) -> f64 {
    BOLTZMANN * (temperature_c + KELVIN_OFFSET) / ELEMENTARY_CHARGE
}

/// Module-level diode scale voltage `n * Ns * Vt`.
pub fn diode_scale_voltage(temperature_c: f64, params: &PvModuleParams) -> f64 {
    params.diode_ideality * f64::from(params.n_cells_series) * thermal_voltage(temperature_c)
}

/// Light-generated current of one module, exactly linear in irradiance.
pub fn photocurrent(env: &EnvInput, params: &PvModuleParams) -> f64 {
    (env.insolation / params.g_ref) * (params.isc_stc + params.alpha_isc * (env.temperature - params.t_ref))
}

/// Diode saturation current at `temperature_c`.
///
/// Obtained from the open-circuit condition at reference irradiance, with the
/// open-circuit voltage following the datasheet coefficient linearly:
/// `Voc(T) = voc_stc + beta_voc * (T - t_ref)`. At `t_ref` this is the fitted
/// reference saturation current.
pub fn saturation_current(temperature_c: f64, params: &PvModuleParams) -> f64 {
    let dt = temperature_c - params.t_ref;
    let iph_ref = params.isc_stc + params.alpha_isc * dt;
    let voc = params.voc_stc + params.beta_voc * dt;
    let a = diode_scale_voltage(temperature_c, params);
    (iph_ref - voc / params.r_shunt) / (voc / a).exp_m1()
}

/// Module current at terminal voltage `v` (module level).
pub fn current_at_voltage(v: f64, env: &EnvInput, params: &PvModuleParams) -> Result<f64, PvError> {
    current_at_voltage_with(v, env, params, DEFAULT_MAX_ITER)
}

/// [`current_at_voltage`] with an explicit iteration cap.
pub fn current_at_voltage_with(
    v: f64,
    env: &EnvInput,
    params: &PvModuleParams,
    max_iter: usize,
) -> Result<f64, PvError> {
    let iph = photocurrent(env, params);
    let i0 = saturation_current(env.temperature, params);
    let a = diode_scale_voltage(env.temperature, params);
    let rs = params.r_series;
    let rsh = params.r_shunt;

    if rs == 0.0 {
        // Explicit when there is no series resistance.
        return Ok(iph - i0 * (v / a).exp_m1() - v / rsh);
    }

    let residual = |i: f64| {
        let vd = v + i * rs;
        let e = (vd / a).exp();
        let f = iph - i0 * (e - 1.0) - vd / rsh - i;
        let df = -i0 * rs / a * e - rs / rsh - 1.0;
        (f, df)
    };

    // f is strictly decreasing and concave in I. At I = Iph the residual is
    // <= 0 for v >= 0; at I = -v/Rs the diode and shunt terms vanish and the
    // residual is Iph + v/Rs >= 0.
    let hi = iph.max(0.0);
    let lo = (-v / rs).min(0.0);
    safeguarded_newton(residual, lo, hi, hi, max_iter)
}

/// Module open-circuit voltage. Zero when there is no light.
pub fn open_circuit_voltage(env: &EnvInput, params: &PvModuleParams) -> Result<f64, PvError> {
    let iph = photocurrent(env, params);
    if iph <= 0.0 {
        return Ok(0.0);
    }
    let i0 = saturation_current(env.temperature, params);
    let a = diode_scale_voltage(env.temperature, params);
    let rsh = params.r_shunt;
    let residual = |v: f64| {
        let e = (v / a).exp();
        (iph - i0 * (e - 1.0) - v / rsh, -i0 / a * e - 1.0 / rsh)
    };
    // Ignoring the shunt gives an upper bound on the root.
    let hi = a * (iph / i0).ln_1p();
    safeguarded_newton(residual, 0.0, hi, hi, DEFAULT_MAX_ITER)
}

/// Newton iteration on a decreasing function bracketed by `f(lo) >= 0 >= f(hi)`,
/// falling back to bisection whenever a step leaves the bracket.
fn safeguarded_newton(
    f: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    start: f64,
    max_iter: usize,
) -> Result<f64, PvError> {
    let mut x = start;
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let tol = 4.0 * f64::EPSILON * (1.0 + next.abs());
        if (next - x).abs() <= tol || hi - lo <= tol {
            return Ok(next);
        }
        x = next;
    }
    Err(PvError::NonConvergence {
        iterations: max_iter,
        last: 0.5 * (lo + hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fitted() -> PvModuleParams {
        crate::pv::fit_diode_params(&PvModuleParams::default()).unwrap()
    }

    fn residual(v: f64, i: f64, env: &EnvInput, p: &PvModuleParams) -> f64 {
        let a = diode_scale_voltage(env.temperature, p);
        let vd = v + i * p.r_series;
        photocurrent(env, p) - saturation_current(env.temperature, p) * (vd / a).exp_m1() - vd / p.r_shunt - i
    }

    #[test]
    fn photocurrent_reference_points() {
        let p = PvModuleParams::default();
        assert_eq!(photocurrent(&EnvInput::new(0.0, 25.0), &p), 0.0);
        assert_eq!(photocurrent(&EnvInput::new(1000.0, 25.0), &p), p.isc_stc);
        assert!((photocurrent(&EnvInput::new(500.0, 25.0), &p) - 4.3).abs() < 1e-12);
    }

    #[test]
    fn photocurrent_is_linear_in_insolation() {
        let p = PvModuleParams::default();
        let base = photocurrent(&EnvInput::new(100.0, 40.0), &p) / 100.0;
        for g in [250.0, 500.0, 750.0, 1000.0, 1300.0] {
            let ratio = photocurrent(&EnvInput::new(g, 40.0), &p) / g;
            assert!((ratio - base).abs() <= 1e-15 * base.abs().max(1.0));
        }
    }

    #[test]
    fn dead_panel_delivers_nothing() {
        let p = fitted();
        let env = EnvInput::new(0.0, 25.0);
        assert_eq!(current_at_voltage(0.0, &env, &p).unwrap(), 0.0);
        assert_eq!(open_circuit_voltage(&env, &p).unwrap(), 0.0);
    }

    #[test]
    fn current_vanishes_at_open_circuit() {
        let p = fitted();
        for (g, t) in [(1000.0, 25.0), (300.0, 60.0), (1400.0, -10.0)] {
            let env = EnvInput::new(g, t);
            let voc = open_circuit_voltage(&env, &p).unwrap();
            assert!(current_at_voltage(voc, &env, &p).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn residual_is_tiny_across_the_curve() {
        let p = fitted();
        let env = EnvInput::new(850.0, 35.0);
        let voc = open_circuit_voltage(&env, &p).unwrap();
        for k in 0..=50 {
            let v = voc * f64::from(k) / 50.0 * 1.05;
            let i = current_at_voltage(v, &env, &p).unwrap();
            assert!(residual(v, i, &env, &p).abs() <= 1e-9, "v={v} i={i}");
        }
    }

    #[test]
    fn zero_series_resistance_is_explicit() {
        let p = PvModuleParams { r_series: 0.0, ..fitted() };
        let env = EnvInput::stc();
        let i = current_at_voltage(20.0, &env, &p).unwrap();
        assert!(residual(20.0, i, &env, &p).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_reports_bracketed_substitute() {
        let p = fitted();
        let env = EnvInput::stc();
        let err = current_at_voltage_with(30.0, &env, &p, 1).unwrap_err();
        let last = err.substitute().expect("substitute value");
        assert!(last.is_finite());
        assert!(matches!(err, PvError::NonConvergence { iterations: 1, .. }));
    }

    #[test]
    fn open_circuit_voltage_falls_with_temperature() {
        let p = fitted();
        let mut prev = f64::INFINITY;
        for t in (0..=75).step_by(5) {
            let voc = open_circuit_voltage(&EnvInput::new(1000.0, f64::from(t)), &p).unwrap();
            assert!(voc < prev);
            prev = voc;
        }
    }

    #[test]
    fn open_circuit_voltage_tracks_datasheet_coefficient_at_reference_irradiance() {
        let p = fitted();
        let voc50 = open_circuit_voltage(&EnvInput::new(1000.0, 50.0), &p).unwrap();
        assert!((voc50 - (p.voc_stc + 25.0 * p.beta_voc)).abs() < 1e-9);
    }
}
