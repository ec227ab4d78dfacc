//! Collective dephasing leaves the code untouched and scrambles other states.
//!
//! ```text
//! cargo run --example dephasing
//! ```

use holodfs::dfs::{basis_superposition, build_code, dephase, DephasingEnsemble};
use holodfs::qops::C64;

fn main() -> holodfs::Result<()> {
    let ensemble = DephasingEnsemble::uniform(4096, 0x5EED)?;
    for n in 1..=3 {
        let code = build_code(n)?;
        let worst = code
            .logical_states()
            .iter()
            .map(|s| dephase(s, &ensemble))
            .collect::<holodfs::Result<Vec<_>>>()?
            .into_iter()
            .fold(1.0, f64::min);
        println!(
            "{n} logical qubit(s) on {} physical: worst code-state fidelity {worst:.15}",
            code.n_physical()
        );
    }

    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let ghz = basis_superposition(4, &[(h, 0b0000), (h, 0b1111)])?;
    println!(
        "GHZ on four qubits: fidelity {:.6}",
        dephase(&ghz, &ensemble)?
    );
    Ok(())
}
