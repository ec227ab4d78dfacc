//! Two-qubit conditional phase from the eight-qubit `h_4` family.
//!
//! Only `|11>_L` carries a dark state, so the holonomy is diagonal. The
//! example also checks that the gate entangles `|+>|+>`.
//!
//! ```text
//! cargo run --example controlled_phase
//! ```

use std::f64::consts::PI;

use holodfs::adiabatic::{code_frame, holonomy, relative_phase, ParameterLoop};
use holodfs::gates::{is_diagonal, schmidt_rank};
use holodfs::hams::HamiltonianFamily;
use holodfs::qops::C64;
use nalgebra::DVector;

fn main() -> holodfs::Result<()> {
    let family = HamiltonianFamily::h_4();
    let frame = code_frame(&family)?;
    println!("winding of the coupling phase: {}", family.winding());
    for phi0 in [PI / 4.0, PI / 2.0, PI] {
        let lp = ParameterLoop::standard(phi0, 200.0, 20_000)?;
        let r = holonomy(&family, &lp, &frame)?;
        let plus = DVector::from_element(4, C64::new(0.5, 0.0));
        let out = &r.unitary * plus;
        println!(
            "phi0 = {phi0:.4}: diagonal = {}, phase on |11> = {:+.6}, Schmidt rank of U|++> = {}",
            is_diagonal(&r.unitary, 1e-6),
            relative_phase(&r.unitary, 0, 3),
            schmidt_rank(&out, 1e-6)?
        );
    }
    Ok(())
}
