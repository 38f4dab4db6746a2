use std::fmt::Write as _;

use super::RuntimeError;
use crate::pv::{iv_curve, mpp_bruteforce, EnvInput, PvModuleParams};

/// Parses `"G,T;G,T;..."` into environment pairs.
pub fn parse_grid(text: &str) -> Result<Vec<(f64, f64)>, RuntimeError> {
    let bad = |item: &str| RuntimeError::Config(format!("grid entry {item:?} is not G,T"));
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (g, t) = item.split_once(',').ok_or_else(|| bad(item))?;
            let g: f64 = g.trim().parse().map_err(|_| bad(item))?;
            let t: f64 = t.trim().parse().map_err(|_| bad(item))?;
            if !(g.is_finite() && t.is_finite()) {
                return Err(bad(item));
            }
            Ok((g, t))
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.is_empty() { Err(RuntimeError::Config("empty grid".into())) } else { Ok(v) })
}

/// One CSV table of I-V and P-V points for every grid entry, followed by a
/// comment line with each curve's maximum power point.
pub fn curve_table(params: &PvModuleParams, grid: &[(f64, f64)], n_points: usize) -> Result<String, RuntimeError> {
    let mut out = String::from("insolation,temperature,v,i,p\n");
    let mut mpps = Vec::new();
    for &(g, t) in grid {
        let env = EnvInput::new(g, t);
        let curve = iv_curve(&env, params, n_points)?;
        for (v, i) in curve.points {
            writeln!(out, "{},{},{v},{i},{}", env.insolation, env.temperature, v * i).expect("string write");
        }
        let mpp = mpp_bruteforce(&env, params)?;
        mpps.push(format!("G={} T={} vmp={:.4} imp={:.4} pmp={:.4}", env.insolation, env.temperature, mpp.v, mpp.i, mpp.p));
    }
    for line in mpps {
        writeln!(out, "# mpp {line}").expect("string write");
    }
    Ok(out)
}
