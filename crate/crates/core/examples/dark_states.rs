//! Dark states of Lambda systems and of the R-operator Hamiltonians, and
//! how well a loop keeps the state dark along the way.
//!
//! ```text
//! cargo run --example dark_states
//! ```

use std::f64::consts::PI;

use holodfs::adiabatic::{evolve_block, Integrator, ParameterLoop};
use holodfs::hams::{h_lambda, psi1, ControlParams, DarkSpan, HamiltonianFamily, LambdaSystem};

fn main() -> holodfs::Result<()> {
    let sys = LambdaSystem {
        e: 0b0100,
        g1: 0b0001,
        g2: 0b1000,
        first: (0.8, 0.3),
        second: (0.6, -1.1),
    };
    let (h, span) = h_lambda(&sys, 4)?;
    if let DarkSpan::Single(d) = &span {
        println!("Lambda dark-state residual {:.2e}", h.apply(d)?.norm());
    }

    let family = HamiltonianFamily::h_z();
    let lp = ParameterLoop::standard(PI, 100.0, 10_000)?;
    let start = psi1(&ControlParams::angles(0.0, 0.0));
    let mut worst: f64 = 0.0;
    evolve_block(&family, &lp, &[start], Integrator::Taylor, &mut |view| {
        let dark = psi1(&ControlParams::angles(view.theta, view.phi));
        let overlap = dark.amplitudes().dotc(&view.states[0]).norm();
        worst = worst.max(1.0 - overlap * overlap);
        if view.step % 2_500 == 0 {
            println!(
                "t = {:>6.1}  theta = {:.3}  phi = {:.3}  1 - |<dark|psi>|^2 = {:.2e}",
                view.time,
                view.theta,
                view.phi,
                1.0 - overlap * overlap
            );
        }
    })?;
    println!("worst non-adiabatic loss along the loop: {worst:.2e}");
    Ok(())
}
