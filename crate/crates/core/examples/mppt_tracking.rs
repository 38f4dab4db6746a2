//! Perturb-and-observe tracking against the true maximum power point.
//!
//! cargo run --example mppt_tracking

use pvtwin::control::MpptState;
use pvtwin::pv::{array_current, fit_diode_params, mpp_bruteforce, EnvInput, PvModuleParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = fit_diode_params(&PvModuleParams::default())?;
    let env = EnvInput::new(800.0, 25.0);
    let best = mpp_bruteforce(&env, &params)?;
    let mut mppt = MpptState::new(20.0, 0.5, 45.0);
    for k in 0..=200 {
        let p = mppt.v_ref * array_current(mppt.v_ref, &env, &params)?.max(0.0);
        if k % 20 == 0 {
            println!("update {k:>3}: v_ref={:6.2} V  p={:7.2} W  ({:5.2}% of MPP)", mppt.v_ref, p, 100.0 * p / best.p);
        }
        mppt = mppt.pno_step(p);
    }
    println!("true MPP: {:.3} V, {:.3} W", best.v, best.p);
    Ok(())
}
