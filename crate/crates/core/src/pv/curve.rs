use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{current_at_voltage, open_circuit_voltage, EnvInput, PvError, PvModuleParams};

/// Grid size of the brute-force maximum power point scan.
pub const MPP_GRID_POINTS: usize = 2001;

const GOLDEN_TOL: f64 = 1e-9;

/// Array-level I-V curve sampled uniformly in voltage on `[0, Voc]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvCurve {
    /// `(voltage V, current A)` pairs.
    pub points: Vec<(f64, f64)>,
    pub env: EnvInput,
    /// Samples where the solver hit its iteration cap and the bracketed
    /// value was used instead.
    pub substituted: usize,
}

impl IvCurve {
    pub fn open_circuit_voltage(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.0)
    }

    pub fn short_circuit_current(&self) -> f64 {
        self.points.first().map_or(0.0, |p| p.1)
    }

    /// Largest sampled `v * i`.
    pub fn max_sampled_power(&self) -> (f64, f64) {
        self.points
            .iter()
            .map(|&(v, i)| (v, v * i))
            .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxPowerPoint {
    pub v: f64,
    pub i: f64,
    pub p: f64,
}

/// Array current at array terminal voltage `v_array`.
pub fn array_current(v_array: f64, env: &EnvInput, params: &PvModuleParams) -> Result<f64, PvError> {
    let v_module = v_array / params.series_modules();
    current_at_voltage(v_module, env, params)
        .map(|i| i * params.parallel_strings())
        .map_err(|e| match e {
            PvError::NonConvergence { iterations, last } => PvError::NonConvergence {
                iterations,
                last: last * params.parallel_strings(),
            },
            other => other,
        })
}

pub fn array_open_circuit_voltage(env: &EnvInput, params: &PvModuleParams) -> Result<f64, PvError> {
    Ok(open_circuit_voltage(env, params)? * params.series_modules())
}

/// Current with the substitute-and-warn policy applied. The flag reports a
/// substitution.
fn current_or_substitute(v_array: f64, env: &EnvInput, params: &PvModuleParams) -> (f64, bool) {
    match array_current(v_array, env, params) {
        Ok(i) => (i, false),
        Err(err) => {
            let last = err.substitute().unwrap_or(0.0);
            warn!(v = v_array, %err, "PV solve substituted bracketed value");
            (last, true)
        }
    }
}

/// Array I-V curve with `n_points` uniform voltage samples from 0 to Voc.
///
/// A dark array (Voc = 0) yields the single point `(0, 0)`.
pub fn iv_curve(env: &EnvInput, params: &PvModuleParams, n_points: usize) -> Result<IvCurve, PvError> {
    if n_points < 2 {
        return Err(PvError::TooFewPoints(n_points));
    }
    let voc = array_open_circuit_voltage(env, params)?;
    if voc <= 0.0 {
        return Ok(IvCurve { points: vec![(0.0, 0.0)], env: *env, substituted: 0 });
    }
    let last = (n_points - 1) as f64;
    let mut substituted = 0;
    let mut points = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let v = if k + 1 == n_points { voc } else { voc * k as f64 / last };
        let (i, sub) = current_or_substitute(v, env, params);
        substituted += usize::from(sub);
        points.push((v, i));
    }
    Ok(IvCurve { points, env: *env, substituted })
}

/// Array maximum power point: a 2001-point voltage scan on `[0, Voc]` refined
/// by golden-section search over the neighbours of the best grid point.
pub fn mpp_bruteforce(env: &EnvInput, params: &PvModuleParams) -> Result<MaxPowerPoint, PvError> {
    let voc = array_open_circuit_voltage(env, params)?;
    if voc <= 0.0 {
        return Ok(MaxPowerPoint { v: 0.0, i: 0.0, p: 0.0 });
    }
    let power = |v: f64| v * current_or_substitute(v, env, params).0;

    let step = voc / (MPP_GRID_POINTS - 1) as f64;
    let (best_k, _) = (0..MPP_GRID_POINTS)
        .map(|k| (k, power(k as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });

    let lo = best_k.saturating_sub(1) as f64 * step;
    let hi = ((best_k + 1).min(MPP_GRID_POINTS - 1) as f64 * step).min(voc);
    let v = golden_section_max(power, lo, hi);
    let i = current_or_substitute(v, env, params).0;
    Ok(MaxPowerPoint { v, i, p: v * i })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
