//! Fits series and shunt resistance to datasheet points and shows the residuals.
//!
//! cargo run --example datasheet_fit

use pvtwin::pv::{array_current, fit_diode_params, mpp_bruteforce, open_circuit_voltage, EnvInput, PvModuleParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sheet = PvModuleParams::default();
    let fitted = fit_diode_params(&sheet)?;
    println!("datasheet guess: Rs={} ohm, Rsh={} ohm", sheet.r_series, sheet.r_shunt);
    println!("fitted:          Rs={:.6} ohm, Rsh={:.3} ohm", fitted.r_series, fitted.r_shunt);

    let stc = EnvInput::stc();
    let isc = array_current(0.0, &stc, &fitted)?;
    let voc = open_circuit_voltage(&stc, &fitted)?;
    let imp = array_current(sheet.vmp_stc, &stc, &fitted)?;
    let mpp = mpp_bruteforce(&stc, &fitted)?;
    let rel = |got: f64, want: f64| 100.0 * (got - want) / want;
    println!("Isc {isc:.4} A  ({:+.3}%)", rel(isc, sheet.isc_stc));
    println!("Voc {voc:.4} V  ({:+.3}%)", rel(voc, sheet.voc_stc));
    println!("Imp {imp:.4} A  ({:+.3}%)", rel(imp, sheet.imp_stc));
    println!("Pmp {:.3} W at {:.3} V  ({:+.3}%)", mpp.p, mpp.v, rel(mpp.p, sheet.vmp_stc * sheet.imp_stc));

    // A datasheet no single-diode model can match is reported, not forced.
    let impossible = PvModuleParams { imp_stc: 8.55, vmp_stc: 36.5, ..sheet };
    match fit_diode_params(&impossible) {
        Ok(_) => println!("unexpected fit"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
