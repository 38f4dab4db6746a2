//! Fault injection at the PCC, overcurrent trip, and operator recovery.
//!
//! cargo run --example breaker_fault

use pvtwin::control::{BreakerCommand, FaultCommand};
use pvtwin::plant::{Plant, PlantCommand, SimConfig};
use pvtwin::pv::{fit_diode_params, PvModuleParams};

fn show(plant: &Plant, what: &str) {
    let s = plant.state();
    println!(
        "t={:6.3}s {:<22} breaker={:<8} fault={:<5} v_ac={:7.2} V  i_load={:.3} A",
        s.t_sim,
        what,
        s.breaker.position.as_str(),
        s.fault.active,
        s.ac_vrms,
        s.load_i_rms
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SimConfig::offline();
    println!("trip threshold {:.3} A after {} s", config.effective_trip_threshold(), config.trip_delay);
    let mut plant = Plant::new(fit_diode_params(&PvModuleParams::default())?, config)?;
    for _ in 0..100 {
        plant.step();
    }
    show(&plant, "steady");

    plant.apply_command(&PlantCommand::Fault { action: FaultCommand::Inject })?;
    let injected = plant.steps();
    while plant.state().breaker.is_closed() {
        plant.step();
    }
    show(&plant, &format!("tripped after {} steps", plant.steps() - injected));

    let close = PlantCommand::Breaker { action: BreakerCommand::Close };
    if let Err(e) = plant.apply_command(&close) {
        println!("close refused: {e}");
    }
    plant.apply_command(&PlantCommand::Fault { action: FaultCommand::Clear })?;
    plant.apply_command(&PlantCommand::Breaker { action: BreakerCommand::Reset })?;
    plant.apply_command(&close)?;
    for _ in 0..100 {
        plant.step();
    }
    show(&plant, "recovered");
    Ok(())
}
