//! Holonomic phase on the five-qubit noiseless subsystem.
//!
//! The gate acts on the multiplicity index of the `J = 3/2` block and must
//! not depend on the `m` sector it is run in.
//!
//! ```text
//! cargo run --example noiseless_subsystem
//! ```

use std::f64::consts::PI;

use holodfs::adiabatic::ParameterLoop;
use holodfs::hams::ControlParams;
use holodfs::ns::{collective_spin, ns_holonomy, NsCode, NsVariant};
use holodfs::qops::{commutator, Axis};

fn main() -> holodfs::Result<()> {
    let code = NsCode::new()?;
    let h = code
        .family(NsVariant::Z)?
        .build(&ControlParams::angles(0.7, 1.9));
    for axis in Axis::ALL {
        let c = commutator(&h, &collective_spin(5, axis)?).max_abs();
        println!("|[H, S_{axis}]| = {c:.2e}");
    }

    let lp = ParameterLoop::standard(PI / 2.0, 200.0, 20_000)?;
    let res = ns_holonomy(&code, NsVariant::Z, &lp)?;
    for (m2, r) in &res.sectors {
        println!(
            "m = {m2:+}/2: relative phase {:+.6}, leakage {:.2e}",
            r.relative_phase(),
            r.protected_leakage_max
        );
    }
    println!("spread across m: {:.2e}", res.m_spread);
    Ok(())
}
