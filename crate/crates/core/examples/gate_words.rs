//! Approximating a Hadamard with products of measured holonomic gates.
//!
//! ```text
//! cargo run --example gate_words
//! ```

use std::f64::consts::PI;

use holodfs::adiabatic::{code_frame, holonomy, ParameterLoop};
use holodfs::gates::{closest_word, compose, hadamard, phase_distance};
use holodfs::hams::HamiltonianFamily;

fn main() -> holodfs::Result<()> {
    let mut generators = Vec::new();
    let mut names = Vec::new();
    for family in [HamiltonianFamily::h_z(), HamiltonianFamily::h_x()] {
        let frame = code_frame(&family)?;
        for k in [1, 2] {
            let phi0 = k as f64 * PI / 4.0;
            let lp = ParameterLoop::standard(phi0, 100.0, 10_000)?;
            generators.push(holonomy(&family, &lp, &frame)?.unitary);
            names.push(format!("{}(pi*{k}/4)", family.name()));
        }
    }
    let (word, d) = closest_word(&generators, 5, &hadamard())?;
    let spelled: Vec<&str> = word.iter().map(|&k| names[k].as_str()).collect();
    println!("best word: {}", spelled.join(" then "));
    println!("distance to H: {d:.4}");
    let picked: Vec<_> = word.iter().map(|&k| generators[k].clone()).collect();
    println!(
        "recomputed distance: {:.4}",
        phase_distance(&compose(&picked)?, &hadamard())?
    );
    Ok(())
}
