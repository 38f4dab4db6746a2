//! Runs every bundled scenario offline and prints the segment means.
//!
//! cargo run --example offline_scenario

use pvtwin::plant::Pacing;
use pvtwin::runtime::{bundled_scenario, run_scenario, PlantConfig, BUNDLED_SCENARIOS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PlantConfig::default();
    let dir = std::env::temp_dir();
    for (name, _) in BUNDLED_SCENARIOS {
        let script = bundled_scenario(name).expect("bundled");
        let out = dir.join(format!("pvtwin-{name}.jsonl"));
        let summary = run_scenario(&script, &config, Pacing::Offline, Some(&out))?;
        println!("{name}: {} steps, {} samples -> {}", summary.steps, summary.samples, out.display());
        for s in &summary.segments {
            println!(
                "  [{:5.2}, {:5.2}] s  G={:6.1} T={:5.1}  pv {:6.2} V {:6.3} A {:7.2} W  load {:5.2} W  breaker-side v_ac {:6.2} V",
                s.start, s.end, s.mean_insolation, s.mean_temperature, s.mean_pv_v, s.mean_pv_i, s.mean_pv_p,
                s.mean_load_p_actual, s.mean_ac_vrms
            );
        }
        if !summary.rejected_events.is_empty() {
            println!("  rejected: {:?}", summary.rejected_events);
        }
    }
    Ok(())
}
