//! Holonomic quantum gates executed inside decoherence-free subspaces.
//!
//! The crate builds the controllable Hamiltonian families whose dark states
//! carry encoded qubits, drives them around adiabatic loops in the `(theta, phi)`
//! control plane, and reads off the resulting geometric unitaries. Alongside
//! the dynamics it checks the structural claims the gates rest on: the code
//! space is an eigenspace of collective `Z`, the analytic dark states are
//! annihilated, and the five-qubit Clebsch-Gordan decomposition carries a
//! four-dimensional noiseless subsystem.
//!
//! Modules, bottom up:
//!
//! - [`qops`]: dense operator algebra (Paulis, exchange-type `R` operators,
//!   matrix exponential, null spaces).
//! - [`dfs`]: the collective-dephasing code, leakage and a dephasing ensemble.
//! - [`hams`]: Hamiltonian families and their analytic dark states.
//! - [`adiabatic`]: parameter loops, the propagator and holonomy extraction.
//! - [`gates`]: gate targets, fidelities and composition.
//! - [`ns`]: collective spin, the Clebsch-Gordan basis and the noiseless
//!   subsystem code.
//! - [`verify`]: the invariant suite behind `holodfs verify`.
//! - [`cli`]: the `holodfs` command line.

pub mod adiabatic;
pub mod cli;
pub mod dfs;
pub mod error;
pub mod gates;
pub mod hams;
pub mod ns;
pub mod qops;
pub mod verify;

pub use error::{Error, Result};
pub use qops::{Axis, Operator, QuantumState, C64};
