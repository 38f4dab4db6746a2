//! Paces the plant against the wall clock for two seconds and reports timing.
//!
//! cargo run --release --example realtime_pacing

use std::sync::atomic::AtomicBool;

use pvtwin::plant::{Plant, Runner, SimConfig};
use pvtwin::pv::{fit_diode_params, PvModuleParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SimConfig::default();
    let dt = config.dt;
    let plant = Plant::new(fit_diode_params(&PvModuleParams::default())?, config)?;
    let mut runner = Runner::new(plant);
    let mut samples = Vec::new();
    let steps = (2.0 / dt) as u64;
    let report = runner.run_paced(&AtomicBool::new(false), Some(steps), &mut samples, |_| {});
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!(
        "mean period {:.4} ms vs {:.4} ms ({:+.2}%), {} samples streamed",
        report.mean_period * 1e3,
        dt * 1e3,
        100.0 * (report.mean_period - dt) / dt,
        samples.len()
    );
    Ok(())
}
