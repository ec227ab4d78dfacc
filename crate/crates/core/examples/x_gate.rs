//! Mixing gate from the `h_x` family, whose mover is `|->_L`.
//!
//! ```text
//! cargo run --example x_gate
//! ```

use std::f64::consts::PI;

use holodfs::adiabatic::{code_frame, holonomy, ParameterLoop};
use holodfs::gates::{gate_fidelity, is_unitary};
use holodfs::hams::HamiltonianFamily;
use holodfs::qops::C64;
use nalgebra::DMatrix;

fn show(label: &str, u: &DMatrix<C64>) {
    println!("{label}:");
    for r in 0..u.nrows() {
        let row: Vec<String> = (0..u.ncols())
            .map(|c| format!("{:+.4}{:+.4}i", u[(r, c)].re, u[(r, c)].im))
            .collect();
        println!("  [{}]", row.join("  "));
    }
}

fn main() -> holodfs::Result<()> {
    let family = HamiltonianFamily::h_x();
    let frame = code_frame(&family)?;
    let lp = ParameterLoop::standard(PI / 2.0, 200.0, 20_000)?;
    let r = holonomy(&family, &lp, &frame)?;
    show("measured holonomy", &r.unitary);
    show("adiabatic-limit prediction", &r.predicted);
    println!("unitary: {}", is_unitary(&r.unitary, 1e-6));
    println!(
        "fidelity to prediction: {:.8}",
        gate_fidelity(&r.unitary, &r.predicted)?
    );
    for w in &r.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
