//! Holonomy error against loop duration, printed as CSV.
//!
//! ```text
//! cargo run --example adiabatic_sweep > sweep.csv
//! ```

use std::f64::consts::PI;

use holodfs::adiabatic::{adiabaticity_sweep, code_frame, trend_fraction, ParameterLoop};
use holodfs::hams::HamiltonianFamily;

fn main() -> holodfs::Result<()> {
    let family = HamiltonianFamily::h_x();
    let frame = code_frame(&family)?;
    let template = ParameterLoop::standard(PI, 1.0, 3)?;
    let times = [25.0, 50.0, 100.0, 200.0, 400.0];
    let rows = adiabaticity_sweep(&family, &frame, &template, &times, 0.01)?;
    println!("T,steps,phase_error,leakage,code_leakage");
    for r in &rows {
        println!(
            "{},{},{:.6e},{:.6e},{:.6e}",
            r.total_time, r.steps, r.phase_error, r.leakage_max, r.code_leakage
        );
    }
    eprintln!("fraction of decreasing steps: {:.2}", trend_fraction(&rows));
    Ok(())
}
