//! Total-spin decomposition of `n` spin-1/2 particles.
//!
//! ```text
//! cargo run --example clebsch_gordan -- 5
//! ```

use holodfs::ns::cg_decompose;

fn main() -> holodfs::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(5);
    let d = cg_decompose(n)?;
    println!("{n} qubits, dimension {}", d.dimension());
    for (j, mult) in d.multiplicities() {
        println!("  J = {j:>4}: multiplicity {mult}");
    }
    let c = d.check()?;
    println!(
        "eigen residual {:.2e}, lowering residual {:.2e}",
        c.eigen_residual, c.lowering_residual
    );
    Ok(())
}
