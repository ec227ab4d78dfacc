//! The collective-dephasing code and its noise model.
//!
//! One encoded qubit lives in four physical qubits, inside the single
//! excitation sector `span{|1000>, |0100>, |0010>, |0001>}`:
//!
//! | label  | ket      | index | excited qubit |
//! |--------|----------|-------|---------------|
//! | `0_L`  | `|0001>` | 1     | 1             |
//! | `1_L`  | `|0010>` | 2     | 2             |
//! | `a2`   | `|0100>` | 4     | 3             |
//! | `a1`   | `|1000>` | 8     | 4             |
//!
//! Block `b` of an `N`-block code occupies qubits `4(b-1)+1 ..= 4b`.

use std::f64::consts::TAU;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qops::{collective_z_eigenvalue, Operator, QuantumState, C64};

pub const MAX_LOGICAL: usize = 3;
pub const DEFAULT_SAMPLES: usize = 4096;
pub const DEFAULT_SEED: u64 = 0x5EED;

/// Per-block basis label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockLabel {
    Zero,
    One,
    A1,
    A2,
}

impl BlockLabel {
    /// Ordering used for the ancilla-extended basis.
    pub const ALL: [BlockLabel; 4] = [
        BlockLabel::Zero,
        BlockLabel::One,
        BlockLabel::A1,
        BlockLabel::A2,
    ];

    /// Qubit (1..=4) inside the block that carries the excitation.
    pub fn excited_qubit(self) -> usize {
        match self {
            BlockLabel::Zero => 1,
            BlockLabel::One => 2,
            BlockLabel::A2 => 3,
            BlockLabel::A1 => 4,
        }
    }

    /// Four-bit pattern of the block.
    pub fn block_bits(self) -> usize {
        1 << (self.excited_qubit() - 1)
    }

    pub fn name(self) -> &'static str {
        match self {
            BlockLabel::Zero => "0_L",
            BlockLabel::One => "1_L",
            BlockLabel::A1 => "a1",
            BlockLabel::A2 => "a2",
        }
    }
}

/// Which projector [`leakage`] measures against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subspace {
    /// The `2^N` logical states.
    Logical,
    /// Logical states and ancillae, i.e. `C^{⊗N}`.
    LogicalAncilla,
    /// The whole collective-`Z` eigenspace with eigenvalue `2N`.
    Dfs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodeBasis {
    n_logical: usize,
    n_physical: usize,
    logical: Vec<(String, usize)>,
    labels: Vec<(String, usize)>,
    dfs: Vec<usize>,
}

/// Physical basis index of a product of block labels (block 1 first).
pub fn product_index(blocks: &[BlockLabel]) -> usize {
    blocks
        .iter()
        .enumerate()
        .map(|(b, l)| l.block_bits() << (4 * b))
        .sum()
}

/// Build the `n_logical`-block code on `4 * n_logical` qubits.
///
/// Logical states are ordered `|0...0>_L` first, binary ascending, with block 1
/// as the most significant logical digit.
pub fn build_code(n_logical: usize) -> Result<CodeBasis> {
    if !(1..=MAX_LOGICAL).contains(&n_logical) {
        return Err(Error::Unsupported(format!(
            "{n_logical} logical qubits (supported: 1..={MAX_LOGICAL})"
        )));
    }
    let n_physical = 4 * n_logical;

    let logical = (0..1usize << n_logical)
        .map(|k| {
            let blocks = logical_blocks(k, n_logical);
            let digits: String = blocks
                .iter()
                .map(|b| if *b == BlockLabel::Zero { '0' } else { '1' })
                .collect();
            (format!("|{digits}>_L"), product_index(&blocks))
        })
        .collect();

    let mut labels = Vec::with_capacity(4usize.pow(n_logical as u32));
    for k in 0..4usize.pow(n_logical as u32) {
        let mut rest = k;
        let mut blocks = vec![BlockLabel::Zero; n_logical];
        for b in (0..n_logical).rev() {
            blocks[b] = BlockLabel::ALL[rest % 4];
            rest /= 4;
        }
        let name = blocks
            .iter()
            .map(|b| b.name())
            .collect::<Vec<_>>()
            .join(" ");
        labels.push((name, product_index(&blocks)));
    }

    let target = 2.0 * n_logical as f64;
    let dfs = (0..1usize << n_physical)
        .filter(|&i| collective_z_eigenvalue(n_physical, i) == target)
        .collect();

    Ok(CodeBasis {
        n_logical,
        n_physical,
        logical,
        labels,
        dfs,
    })
}

fn logical_blocks(k: usize, n_logical: usize) -> Vec<BlockLabel> {
    (0..n_logical)
        .map(|b| {
            let bit = (k >> (n_logical - 1 - b)) & 1;
            if bit == 0 {
                BlockLabel::Zero
            } else {
                BlockLabel::One
            }
        })
        .collect()
}

impl CodeBasis {
    pub fn n_logical(&self) -> usize {
        self.n_logical
    }

    pub fn n_physical(&self) -> usize {
        self.n_physical
    }

    pub fn dim(&self) -> usize {
        1 << self.n_physical
    }

    /// `(label, basis index)` of each logical basis state, in logical order.
    pub fn logical(&self) -> &[(String, usize)] {
        &self.logical
    }

    /// `(label, basis index)` of every product of block labels.
    pub fn labels(&self) -> &[(String, usize)] {
        &self.labels
    }

    /// Basis indices spanning the collective-`Z` eigenspace of the code.
    pub fn dfs_indices(&self) -> &[usize] {
        &self.dfs
    }

    pub fn logical_state(&self, k: usize) -> QuantumState {
        QuantumState::basis(self.n_physical, self.logical[k].1).expect("index from code table")
    }

    pub fn logical_states(&self) -> Vec<QuantumState> {
        (0..self.logical.len())
            .map(|k| self.logical_state(k))
            .collect()
    }

    /// Product state of per-block labels, block 1 first.
    pub fn ket(&self, blocks: &[BlockLabel]) -> Result<QuantumState> {
        if blocks.len() != self.n_logical {
            return Err(Error::DimensionMismatch {
                expected: self.n_logical,
                got: blocks.len(),
            });
        }
        QuantumState::basis(self.n_physical, product_index(blocks))
    }

    pub fn indices(&self, subspace: Subspace) -> Vec<usize> {
        match subspace {
            Subspace::Logical => self.logical.iter().map(|(_, i)| *i).collect(),
            Subspace::LogicalAncilla => self.labels.iter().map(|(_, i)| *i).collect(),
            Subspace::Dfs => self.dfs.clone(),
        }
    }

    /// Projector onto the logical states.
    pub fn code_projector(&self) -> Operator {
        self.projector(Subspace::Logical)
    }

    pub fn projector(&self, subspace: Subspace) -> Operator {
        Operator::basis_projector(self.dim(), &self.indices(subspace))
    }
}

/// `1 - ||P psi||^2` for the chosen projector, clamped to `[0, 1]`.
pub fn leakage(state: &QuantumState, code: &CodeBasis, subspace: Subspace) -> f64 {
    let amps = state.amplitudes();
    let kept: f64 = code
        .indices(subspace)
        .iter()
        .map(|&i| amps[i].norm_sqr())
        .sum();
    (1.0 - kept).clamp(0.0, 1.0)
}

/// Collective dephasing as a classical ensemble of rotations `exp(-i lambda Z)`
/// with `lambda` uniform on `[0, 2 pi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DephasingEnsemble {
    seed: u64,
    angles: Vec<f64>,
}

impl DephasingEnsemble {
    pub fn uniform(sample_count: usize, seed: u64) -> Result<Self> {
        if sample_count == 0 {
            return Err(Error::InvalidArgument("sample_count must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angles = (0..sample_count).map(|_| rng.gen::<f64>() * TAU).collect();
        Ok(Self { seed, angles })
    }

    /// Explicit angle list, for deterministic tests.
    pub fn from_angles(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() || angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument(
                "angles must be non-empty and finite".into(),
            ));
        }
        Ok(Self { seed: 0, angles })
    }

    pub fn sample_count(&self) -> usize {
        self.angles.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

impl Default for DephasingEnsemble {
    fn default() -> Self {
        Self::uniform(DEFAULT_SAMPLES, DEFAULT_SEED).expect("non-empty default ensemble")
    }
}

/// Ensemble-averaged survival `E |<psi| exp(-i lambda Z) |psi>|^2`.
pub fn dephase(state: &QuantumState, ensemble: &DephasingEnsemble) -> Result<f64> {
    state.check_normalized(1e-9)?;
    let n = state.n_qubits();
    // Z is diagonal with eigenvalue n - 2k on weight-k basis states.
    let mut weight = vec![0.0f64; n + 1];
    for (i, a) in state.amplitudes().iter().enumerate() {
        weight[i.count_ones() as usize] += a.norm_sqr();
    }
    let occupied: Vec<(f64, f64)> = weight
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(k, w)| (n as f64 - 2.0 * k as f64, *w))
        .collect();
    if occupied.len() == 1 {
        // Single eigenvalue: every rotation is a global phase.
        return Ok(occupied[0].1 * occupied[0].1);
    }
    let total: f64 = ensemble
        .angles
        .iter()
        .map(|&lambda| {
            occupied
                .iter()
                .map(|&(z, w)| C64::from_polar(w, -lambda * z))
                .sum::<C64>()
                .norm_sqr()
        })
        .sum();
    Ok(total / ensemble.angles.len() as f64)
}

/// Normalized superposition of computational basis states.
pub fn basis_superposition(n_qubits: usize, terms: &[(C64, usize)]) -> Result<QuantumState> {
    let mut v = DVector::zeros(1 << n_qubits);
    for &(c, i) in terms {
        if i >= v.len() {
            return Err(Error::InvalidArgument(format!(
                "basis index {i} out of range"
            )));
        }
        v[i] += c;
    }
    QuantumState::new(n_qubits, v)?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::{collective_z, commutator, ONE};

    #[test]
    fn single_block_indices() {
        let code = build_code(1).unwrap();
        assert_eq!(code.n_physical(), 4);
        assert_eq!(code.logical()[0].1, 1);
        assert_eq!(code.logical()[1].1, 2);
        assert_eq!(product_index(&[BlockLabel::A1]), 0b1000);
        assert_eq!(product_index(&[BlockLabel::A2]), 0b0100);
        assert_eq!(
            code.logical_state(0),
            QuantumState::from_bits("0001").unwrap()
        );
        assert_eq!(
            code.logical_state(1),
            QuantumState::from_bits("0010").unwrap()
        );
    }

    #[test]
    fn labeled_states_share_collective_z_eigenvalue() {
        for n in 1..=2 {
            let code = build_code(n).unwrap();
            let z = collective_z(code.n_physical()).unwrap();
            for (_, i) in code.labels() {
                let s = QuantumState::basis(code.n_physical(), *i).unwrap();
                assert_eq!(z.element(&s, &s).re, 2.0 * n as f64);
                // one excitation per block
                for b in 0..n {
                    assert_eq!(((i >> (4 * b)) & 0xF).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn two_block_code_shape() {
        let code = build_code(2).unwrap();
        assert_eq!(code.dim(), 256);
        assert_eq!(code.logical().len(), 4);
        assert_eq!(code.labels().len(), 16);
        // |01>_L = block 1 in 0_L, block 2 in 1_L
        assert_eq!(code.logical()[1].1, 0b0010_0001);
        assert_eq!(code.logical()[2].1, 0b0001_0010);
        assert_eq!(code.logical()[3].1, 0b0010_0010);
        // C(8, 2) states with two excitations
        assert_eq!(code.dfs_indices().len(), 28);
    }

    #[test]
    fn unsupported_logical_counts() {
        assert!(build_code(0).is_err());
        assert!(build_code(4).is_err());
        assert_eq!(build_code(3).unwrap().n_physical(), 12);
    }

    #[test]
    fn dfs_projector_commutes_with_collective_z() {
        let code = build_code(2).unwrap();
        let p = code.projector(Subspace::Dfs);
        let z = collective_z(8).unwrap();
        assert!(commutator(&p, &z).max_abs() < 1e-12);
    }

    #[test]
    fn code_states_are_immune() {
        let code = build_code(1).unwrap();
        let ens = DephasingEnsemble::default();
        assert_eq!(dephase(&code.logical_state(0), &ens).unwrap(), 1.0);
        let sup = QuantumState::superpose(&[
            (C64::new(0.6, 0.0), &code.logical_state(0)),
            (C64::new(0.0, 0.8), &code.logical_state(1)),
        ])
        .unwrap();
        assert!((dephase(&sup, &ens).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_state_dephases_to_one_half() {
        // Oracle: E[cos^2(4 lambda)] for uniform lambda is 1/2; a direct
        // midpoint quadrature agrees to round-off.
        let quad: f64 = (0..10_000)
            .map(|k| {
                let l = TAU * (k as f64 + 0.5) / 10_000.0;
                (4.0 * l).cos().powi(2)
            })
            .sum::<f64>()
            / 10_000.0;
        assert!((quad - 0.5).abs() < 1e-12);

        let ghz = basis_superposition(4, &[(ONE, 0), (ONE, 15)]).unwrap();
        let ens = DephasingEnsemble::uniform(10_000, DEFAULT_SEED).unwrap();
        let f = dephase(&ghz, &ens).unwrap();
        assert!((f - 0.5).abs() < 0.02, "{f}");

        let fixed = DephasingEnsemble::from_angles(vec![0.0, std::f64::consts::FRAC_PI_8]).unwrap();
        // cos^2(0) = 1, cos^2(pi/2) = 0
        assert!((dephase(&ghz, &fixed).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dephase_rejects_unnormalized() {
        let s = QuantumState::basis(4, 1)
            .unwrap()
            .scaled(C64::new(2.0, 0.0));
        assert!(matches!(
            dephase(&s, &DephasingEnsemble::default()),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn ensemble_is_reproducible() {
        let a = DephasingEnsemble::uniform(64, 7).unwrap();
        let b = DephasingEnsemble::uniform(64, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.angles().iter().all(|x| (0.0..TAU).contains(x)));
        assert!(DephasingEnsemble::uniform(0, 7).is_err());
    }

    #[test]
    fn leakage_examples() {
        let code = build_code(1).unwrap();
        let one = code.logical_state(1);
        assert_eq!(leakage(&one, &code, Subspace::Logical), 0.0);
        let a2 = code.ket(&[BlockLabel::A2]).unwrap();
        assert_eq!(leakage(&a2, &code, Subspace::Logical), 1.0);
        assert_eq!(leakage(&a2, &code, Subspace::LogicalAncilla), 0.0);
        assert_eq!(leakage(&a2, &code, Subspace::Dfs), 0.0);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn any_code_superposition_is_immune(
            re in proptest::collection::vec(-1.0f64..1.0, 16),
            im in proptest::collection::vec(-1.0f64..1.0, 16),
            seed in any::<u64>(),
        ) {
            prop_assume!(re.iter().chain(im.iter()).any(|x| x.abs() > 1e-3));
            let code = build_code(2).unwrap();
            let terms: Vec<(C64, usize)> = code
                .labels()
                .iter()
                .enumerate()
                .map(|(k, (_, i))| (C64::new(re[k], im[k]), *i))
                .collect();
            let s = basis_superposition(8, &terms).unwrap();
            let ens = DephasingEnsemble::uniform(32, seed).unwrap();
            prop_assert!(dephase(&s, &ens).unwrap() >= 1.0 - 1e-12);
        }

        #[test]
        fn leakage_is_ordered(
            re in proptest::collection::vec(-1.0f64..1.0, 16),
            im in proptest::collection::vec(-1.0f64..1.0, 16),
        ) {
            prop_assume!(re.iter().chain(im.iter()).any(|x| x.abs() > 1e-3));
            let code = build_code(1).unwrap();
            let amps = DVector::from_iterator(16, re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)));
            let s = QuantumState::new(4, amps).unwrap().normalized().unwrap();
            let l = leakage(&s, &code, Subspace::Logical);
            let la = leakage(&s, &code, Subspace::LogicalAncilla);
            let d = leakage(&s, &code, Subspace::Dfs);
            prop_assert!((0.0..=1.0).contains(&l));
            prop_assert!(l + 1e-15 >= la && la + 1e-15 >= d);
        }
    }
}
