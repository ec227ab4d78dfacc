//! Phase gate from an adiabatic loop of the `h_z` couplings.
//!
//! Runs the standard loop for a few opening angles and prints the measured
//! relative phase next to the geometric phase of the dark state.
//!
//! ```text
//! cargo run --example z_gate
//! ```

use std::f64::consts::PI;

use holodfs::adiabatic::{code_frame, geometric_phase, holonomy, solid_angle, ParameterLoop};
use holodfs::hams::HamiltonianFamily;

fn main() -> holodfs::Result<()> {
    let family = HamiltonianFamily::h_z();
    let frame = code_frame(&family)?;
    println!(
        "{:>8} {:>10} {:>12} {:>12} {:>10}",
        "phi0", "solid", "geometric", "measured", "leakage"
    );
    for k in 1..=6 {
        let phi0 = k as f64 * PI / 4.0;
        let lp = ParameterLoop::standard(phi0, 200.0, 20_000)?;
        let r = holonomy(&family, &lp, &frame)?;
        println!(
            "{:>8.4} {:>10.4} {:>12.6} {:>12.6} {:>10.2e}",
            phi0,
            solid_angle(&lp),
            geometric_phase(&lp, family.winding()),
            r.relative_phase(),
            r.protected_leakage_max
        );
    }
    Ok(())
}
