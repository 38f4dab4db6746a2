//! I-V and P-V curves of the fitted default module across a few conditions.
//!
//! cargo run --example iv_curves

use pvtwin::pv::{fit_diode_params, iv_curve, mpp_bruteforce, EnvInput, PvModuleParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = fit_diode_params(&PvModuleParams::default())?;
    for (g, t) in [(1000.0, 25.0), (800.0, 25.0), (500.0, 25.0), (1000.0, 50.0), (1000.0, 10.0)] {
        let env = EnvInput::new(g, t);
        let curve = iv_curve(&env, &params, 11)?;
        let mpp = mpp_bruteforce(&env, &params)?;
        println!(
            "G={g:>6} T={t:>4}  Isc={:.3} A  Voc={:.3} V  MPP {:.2} V x {:.3} A = {:.1} W",
            curve.short_circuit_current(),
            curve.open_circuit_voltage(),
            mpp.v,
            mpp.i,
            mpp.p
        );
        for (v, i) in &curve.points {
            println!("    {v:7.3} V  {i:7.4} A  {:8.3} W", v * i);
        }
    }
    Ok(())
}
