//! Collective spin, the Clebsch-Gordan basis and the noiseless subsystem.
//!
//! Spins use `S = (X, Y, Z)/2` per qubit, so `|0>` has `m = +1/2`. Half-integer
//! quantum numbers are carried doubled (`j2 = 2J`, `m2 = 2m`).
//!
//! The multiplicity frame of every block is fixed at `m = J` by Gram-Schmidt
//! over the highest-weight projections of computational basis states taken in
//! index order, then transported to lower `m` with `S^-`. The resulting basis
//! `|J, m, k>` is aligned: `S^- |J,m,k> = c_{J,m} |J,m-1,k>` with the same real
//! positive `c_{J,m}` for every `k`, so collective operators act on `m` only
//! and operators in the commutant act on `k` only.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::adiabatic::{holonomy, HolonomyResult, LogicalFrame, ParameterLoop, Protected};
use crate::error::{Error, Result};
use crate::gates::gate_fidelity;
use crate::hams::{ControlParams, FamilyName, HamiltonianFamily, Term};
use crate::qops::{pauli, pauli_product, Axis, Operator, QuantumState, C64, ONE, ZERO};

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 6;
/// Tolerance of the structural checks on the decomposition and on `verify_ns`.
pub const NS_TOL: f64 = 1e-10;

/// `S^axis = (1/2) sum_l sigma^axis_l`.
pub fn collective_spin(n: usize, axis: Axis) -> Result<Operator> {
    let mut s = Operator::zeros(1usize << n);
    for l in 1..=n {
        s += &pauli(axis, l, n)?;
    }
    Ok(s * 0.5)
}

/// `S^2 = (S^x)^2 + (S^y)^2 + (S^z)^2`.
pub fn s_squared(n: usize) -> Result<Operator> {
    let mut out = Operator::zeros(1usize << n);
    for axis in Axis::ALL {
        let s = collective_spin(n, axis)?;
        out += &(&s * &s);
    }
    Ok(out)
}

/// `S^- = S^x - i S^y`, mapping `|0> -> |1>` on each qubit.
pub fn s_minus(n: usize) -> Result<Operator> {
    let sx = collective_spin(n, Axis::X)?;
    let sy = collective_spin(n, Axis::Y)?;
    Ok(sx + sy.scale(C64::new(0.0, -1.0)))
}

/// `S_l . S_m = (X_l X_m + Y_l Y_m + Z_l Z_m) / 4`.
pub fn exchange(l: usize, m: usize, n: usize) -> Result<Operator> {
    if l == m {
        return Err(Error::SameQubit(l));
    }
    let mut out = Operator::zeros(1usize << n);
    for axis in Axis::ALL {
        out += &pauli_product(n, &[(l, axis), (m, axis)])?;
    }
    Ok(out * 0.25)
}

/// `exp(-i angle n.S)` for a unit (or any non-zero) direction `n`.
pub fn collective_rotation(n_qubits: usize, direction: [f64; 3], angle: f64) -> Result<Operator> {
    let len = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(len.is_finite() && len > 0.0) {
        return Err(Error::InvalidArgument(
            "rotation axis must be non-zero".into(),
        ));
    }
    let mut gen = Operator::zeros(1usize << n_qubits);
    for (axis, c) in Axis::ALL.iter().zip(direction) {
        gen += &(&collective_spin(n_qubits, *axis)? * (c / len));
    }
    crate::qops::mat_exp(&gen, C64::new(0.0, -angle))
}

/// Twice a spin quantum number, printed as `3/2` or `2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(pub i64);

impl HalfInt {
    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// One total-spin block: `states[k][i]` is `|J, m, k>` with `m = J - i`.
#[derive(Clone, Debug)]
pub struct CgBlock {
    pub j2: usize,
    pub states: Vec<Vec<QuantumState>>,
}

impl CgBlock {
    pub fn j(&self) -> HalfInt {
        HalfInt(self.j2 as i64)
    }

    pub fn multiplicity(&self) -> usize {
        self.states.len()
    }

    /// `2J + 1`.
    pub fn m_count(&self) -> usize {
        self.j2 + 1
    }

    /// Doubled `m` values from `J` down to `-J`.
    pub fn m2_values(&self) -> Vec<i64> {
        (0..=self.j2)
            .map(|i| self.j2 as i64 - 2 * i as i64)
            .collect()
    }

    fn m_index(&self, m2: i64) -> Result<usize> {
        let j2 = self.j2 as i64;
        if m2.abs() > j2 || (j2 - m2) % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "m = {} is not in block J = {}",
                HalfInt(m2),
                self.j()
            )));
        }
        Ok(((j2 - m2) / 2) as usize)
    }

    pub fn state(&self, k: usize, m2: i64) -> Result<&QuantumState> {
        let i = self.m_index(m2)?;
        self.states
            .get(k)
            .map(|row| &row[i])
            .ok_or_else(|| Error::InvalidArgument(format!("multiplicity index {k} out of range")))
    }

    /// `sum_k c_k |J, m, k>`.
    pub fn combine(&self, coeffs: &[C64], m2: i64) -> Result<QuantumState> {
        if coeffs.len() != self.multiplicity() {
            return Err(Error::DimensionMismatch {
                expected: self.multiplicity(),
                got: coeffs.len(),
            });
        }
        let i = self.m_index(m2)?;
        let terms: Vec<(C64, &QuantumState)> = coeffs
            .iter()
            .zip(&self.states)
            .map(|(c, row)| (*c, &row[i]))
            .collect();
        QuantumState::superpose(&terms)
    }

    /// All block vectors.
    pub fn vectors(&self) -> Vec<QuantumState> {
        self.states.iter().flatten().cloned().collect()
    }

    /// `C[k, i] = <J, m_i, k|psi>`; the reduced state on the multiplicity factor
    /// is `C C^dag`.
    pub fn coefficients(&self, psi: &QuantumState) -> DMatrix<C64> {
        DMatrix::from_fn(self.multiplicity(), self.m_count(), |k, i| {
            self.states[k][i].inner(psi)
        })
    }

    /// Reduced density matrix of `psi` on the multiplicity factor.
    pub fn multiplicity_state(&self, psi: &QuantumState) -> DMatrix<C64> {
        let c = self.coefficients(psi);
        &c * c.adjoint()
    }
}

#[derive(Clone, Debug)]
pub struct CgDecomposition {
    pub n_qubits: usize,
    /// Blocks in descending `J`.
    pub blocks: Vec<CgBlock>,
}

/// Structural residuals of a decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct CgCheck {
    pub dimension: usize,
    pub expected_dimension: usize,
    /// `max |S^2 v - J(J+1) v|` and `|S_z v - m v|` over all vectors.
    pub eigen_residual: f64,
    /// `max |S^- |J,m,k> - c_{J,m} |J,m-1,k>|`.
    pub lowering_residual: f64,
    /// `max |<u|v> - delta_uv|` over all pairs.
    pub orthonormality_residual: f64,
}

impl CgCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.dimension == self.expected_dimension
            && self.eigen_residual < tol
            && self.lowering_residual < tol
            && self.orthonormality_residual < tol
    }
}

impl CgDecomposition {
    pub fn block(&self, j2: usize) -> Option<&CgBlock> {
        self.blocks.iter().find(|b| b.j2 == j2)
    }

    /// `(J, n_J)` in stored (descending `J`) order.
    pub fn multiplicities(&self) -> Vec<(HalfInt, usize)> {
        self.blocks
            .iter()
            .map(|b| (b.j(), b.multiplicity()))
            .collect()
    }

    /// `sum_J n_J (2J + 1)`.
    pub fn dimension(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.multiplicity() * b.m_count())
            .sum()
    }

    pub fn check(&self) -> Result<CgCheck> {
        let n = self.n_qubits;
        let s2 = s_squared(n)?;
        let sz = collective_spin(n, Axis::Z)?;
        let sm = s_minus(n)?;
        let mut eigen: f64 = 0.0;
        let mut lowering: f64 = 0.0;
        for b in &self.blocks {
            let j = b.j2 as f64 / 2.0;
            for row in &b.states {
                for (i, v) in row.iter().enumerate() {
                    let m = j - i as f64;
                    let a = s2.apply(v)?;
                    let d = a.amplitudes() - v.amplitudes() * C64::new(j * (j + 1.0), 0.0);
                    eigen = eigen.max(d.norm());
                    let a = sz.apply(v)?;
                    let d = a.amplitudes() - v.amplitudes() * C64::new(m, 0.0);
                    eigen = eigen.max(d.norm());
                    let lowered = sm.apply(v)?;
                    let expect = if i + 1 < row.len() {
                        row[i + 1].amplitudes()
                            * C64::new((j * (j + 1.0) - m * (m - 1.0)).sqrt(), 0.0)
                    } else {
                        DVector::zeros(v.dim())
                    };
                    lowering = lowering.max((lowered.amplitudes() - expect).norm());
                }
            }
        }
        let all: Vec<QuantumState> = self.blocks.iter().flat_map(|b| b.vectors()).collect();
        let mut ortho: f64 = 0.0;
        for (a, u) in all.iter().enumerate() {
            for (b, v) in all.iter().enumerate().skip(a) {
                let target = if a == b { ONE } else { ZERO };
                ortho = ortho.max((u.inner(v) - target).norm());
            }
        }
        Ok(CgCheck {
            dimension: self.dimension(),
            expected_dimension: 1 << n,
            eigen_residual: eigen,
            lowering_residual: lowering,
            orthonormality_residual: ortho,
        })
    }
}

/// Simultaneous `(S^2, S_z)` eigenbasis of `n` qubits, `2 <= n <= 6`.
pub fn cg_decompose(n: usize) -> Result<CgDecomposition> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "cg_decompose supports {MIN_QUBITS}..={MAX_QUBITS} qubits, got {n}"
        )));
    }
    let dim = 1usize << n;
    let s2 = s_squared(n)?;
    let sm = s_minus(n)?;
    let j2_values: Vec<usize> = (0..=n)
        .rev()
        .filter(|j2| (n - j2).is_multiple_of(2))
        .collect();
    let mut blocks = Vec::new();
    for &j2 in &j2_values {
        let j = j2 as f64 / 2.0;
        // projector onto total spin J, as a polynomial in S^2
        let mut proj = Operator::identity(dim);
        for &other in j2_values.iter().filter(|&&o| o != j2) {
            let jo = other as f64 / 2.0;
            let shift = jo * (jo + 1.0);
            let factor =
                (&s2 - &(&Operator::identity(dim) * shift)) * (1.0 / (j * (j + 1.0) - shift));
            proj = &proj * &factor;
        }
        // m = J sector: popcount = n/2 - J
        let ones = (n - j2) / 2;
        let mut top: Vec<DVector<C64>> = Vec::new();
        for idx in (0..dim).filter(|i| i.count_ones() as usize == ones) {
            let mut v: DVector<C64> = proj.matrix().column(idx).into_owned();
            for u in &top {
                let c = u.dotc(&v);
                v -= u * c;
            }
            let norm = v.norm();
            if norm > 1e-8 {
                top.push(v / C64::new(norm, 0.0));
            }
        }
        let mut states = Vec::with_capacity(top.len());
        for v in top {
            let mut row = vec![QuantumState::new(n, v)?];
            for _ in 0..j2 {
                let next = sm.apply(row.last().expect("non-empty"))?.normalized()?;
                row.push(next);
            }
            states.push(row);
        }
        if !states.is_empty() {
            blocks.push(CgBlock { j2, states });
        }
    }
    Ok(CgDecomposition {
        n_qubits: n,
        blocks,
    })
}

/// Outcome of checking that an operator acts as `A (x) 1` on one block.
#[derive(Clone, Debug)]
pub struct NsReport {
    /// `|(1 - P_J) op P_J|`.
    pub block_leakage: f64,
    pub preserves_block: bool,
    /// Largest deviation of `<J,m,k|op|J,m',k'>` from `delta_{mm'} A_{kk'}`.
    pub m_deviation: f64,
    pub m_independent: bool,
    /// `A_{kk'}` read off at `m = J`.
    pub multiplicity_action: DMatrix<C64>,
}

/// Checks `<J,m,k|op|J',m',k'> = delta_{JJ'} delta_{mm'} A_{kk'}` on block `j2`.
pub fn verify_ns(decomp: &CgDecomposition, op: &Operator, j2: usize) -> Result<NsReport> {
    let dim = 1usize << decomp.n_qubits;
    if op.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: op.dim(),
        });
    }
    let block = decomp.block(j2).ok_or_else(|| {
        Error::InvalidArgument(format!("no block with J = {}", HalfInt(j2 as i64)))
    })?;
    let vectors = block.vectors();
    let basis = DMatrix::from_columns(
        &vectors
            .iter()
            .map(|v| v.amplitudes().clone())
            .collect::<Vec<_>>(),
    );
    let image = op.matrix() * &basis;
    let inside = &basis * (basis.adjoint() * &image);
    let block_leakage = (&image - inside).norm();

    let kn = block.multiplicity();
    let mc = block.m_count();
    let a = DMatrix::from_fn(kn, kn, |k, kp| {
        op.element(&block.states[k][0], &block.states[kp][0])
    });
    let mut dev: f64 = 0.0;
    for i in 0..mc {
        for ip in 0..mc {
            for k in 0..kn {
                for kp in 0..kn {
                    let el = op.element(&block.states[k][i], &block.states[kp][ip]);
                    let want = if i == ip { a[(k, kp)] } else { ZERO };
                    dev = dev.max((el - want).norm());
                }
            }
        }
    }
    Ok(NsReport {
        block_leakage,
        preserves_block: block_leakage < NS_TOL,
        m_deviation: dev,
        m_independent: dev < NS_TOL,
        multiplicity_action: a,
    })
}

/// Names of the four multiplicity vectors of the `J = 3/2` block of five qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NsLabel {
    A1,
    A2,
    Zero,
    One,
}

impl NsLabel {
    /// Multiplicity index (0-based) carrying the label.
    pub fn index(self) -> usize {
        match self {
            NsLabel::A1 => 0,
            NsLabel::A2 => 1,
            NsLabel::Zero => 2,
            NsLabel::One => 3,
        }
    }

    pub fn vector(self) -> DVector<C64> {
        let mut v = DVector::zeros(4);
        v[self.index()] = ONE;
        v
    }
}

/// Couplings of `A = J'|a1><a2| + J0 e^{i phi}|a1><0| + J1 e^{i phi}|a1><1| + h.c.`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NsCouplings {
    pub j_prime: f64,
    pub j0: f64,
    pub j1: f64,
    pub phi: f64,
}

impl NsCouplings {
    /// `J' = j cos(theta)`, `J1 = j sin(theta)`, `J0 = 0`.
    pub fn z_type(p: &ControlParams) -> Self {
        let (j1, j_prime) = p.couplings();
        Self {
            j_prime,
            j0: 0.0,
            j1,
            phi: p.phi,
        }
    }

    /// Coupling `J'' = j sin(theta)` to `|-> = (|1> - |0>)/sqrt 2`:
    /// `J1 = J''/sqrt 2`, `J0 = -J''/sqrt 2`.
    pub fn x_type(p: &ControlParams) -> Self {
        let (jpp, j_prime) = p.couplings();
        Self {
            j_prime,
            j0: -jpp * FRAC_1_SQRT_2,
            j1: jpp * FRAC_1_SQRT_2,
            phi: p.phi,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.j_prime.is_finite()
            && self.j0.is_finite()
            && self.j1.is_finite()
            && self.phi.is_finite()
    }

    /// The 4x4 multiplicity-space matrix `A`.
    pub fn matrix(&self) -> DMatrix<C64> {
        let mut a = DMatrix::zeros(4, 4);
        let a1 = NsLabel::A1.index();
        a[(a1, NsLabel::A2.index())] = C64::new(self.j_prime, 0.0);
        a[(a1, NsLabel::Zero.index())] = C64::from_polar(self.j0, self.phi);
        a[(a1, NsLabel::One.index())] = C64::from_polar(self.j1, self.phi);
        &a + a.adjoint()
    }
}

/// The one-qubit noiseless-subsystem code in the `J = 3/2` block of five qubits.
#[derive(Clone, Debug)]
pub struct NsCode {
    decomp: CgDecomposition,
}

pub const NS_QUBITS: usize = 5;
pub const NS_J2: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NsVariant {
    /// Phase gate: the mover is `|1>`.
    Z,
    /// Rotation about `X`: the mover is `|-> = (|1> - |0>)/sqrt 2`.
    X,
}

impl NsVariant {
    /// Multiplicity vector that follows the dark state.
    pub fn mover(self) -> DVector<C64> {
        match self {
            NsVariant::Z => NsLabel::One.vector(),
            NsVariant::X => {
                (NsLabel::One.vector() - NsLabel::Zero.vector()) * C64::new(FRAC_1_SQRT_2, 0.0)
            }
        }
    }

    pub fn family_name(self) -> FamilyName {
        match self {
            NsVariant::Z => FamilyName::HNs,
            NsVariant::X => FamilyName::HNsX,
        }
    }
}

impl NsCode {
    pub fn new() -> Result<Self> {
        let decomp = cg_decompose(NS_QUBITS)?;
        match decomp.block(NS_J2) {
            Some(b) if b.multiplicity() == 4 => Ok(Self { decomp }),
            _ => Err(Error::Unsupported(
                "five-qubit J = 3/2 block must have multiplicity 4".into(),
            )),
        }
    }

    pub fn decomposition(&self) -> &CgDecomposition {
        &self.decomp
    }

    pub fn block(&self) -> &CgBlock {
        self.decomp.block(NS_J2).expect("checked in new")
    }

    /// Doubled `m` values of the block: 3, 1, -1, -3.
    pub fn m2_values(&self) -> Vec<i64> {
        self.block().m2_values()
    }

    pub fn label(&self, label: NsLabel, m2: i64) -> Result<QuantumState> {
        Ok(self.block().state(label.index(), m2)?.clone())
    }

    /// `sum_k v_k |J, m, k>` for a multiplicity vector `v`.
    pub fn embed(&self, v: &DVector<C64>, m2: i64) -> Result<QuantumState> {
        self.block().combine(v.as_slice(), m2)
    }

    /// `sum_m sum_{kk'} A_{kk'} |J,m,k><J,m,k'|`.
    pub fn lift(&self, a: &DMatrix<C64>) -> Result<Operator> {
        let block = self.block();
        if a.shape() != (block.multiplicity(), block.multiplicity()) {
            return Err(Error::DimensionMismatch {
                expected: block.multiplicity(),
                got: a.nrows(),
            });
        }
        let dim = 1usize << NS_QUBITS;
        let mut out = DMatrix::zeros(dim, dim);
        for i in 0..block.m_count() {
            let cols = DMatrix::from_columns(
                &block
                    .states
                    .iter()
                    .map(|row| row[i].amplitudes().clone())
                    .collect::<Vec<_>>(),
            );
            out += &cols * a * cols.adjoint();
        }
        Operator::new(out)
    }

    /// `cos(theta)|1> - sin(theta) e^{i phi}|a2>` at doubled magnetic number `m2`.
    pub fn psi3(&self, p: &ControlParams, m2: i64) -> Result<QuantumState> {
        self.dark_state(NsVariant::Z, p, m2)
    }

    pub fn dark_state(
        &self,
        variant: NsVariant,
        p: &ControlParams,
        m2: i64,
    ) -> Result<QuantumState> {
        let v = variant.mover() * C64::new(p.theta.cos(), 0.0)
            - NsLabel::A2.vector() * C64::from_polar(p.theta.sin(), p.phi);
        self.embed(&v, m2)
    }

    /// The loop family on the noiseless subsystem.
    pub fn family(&self, variant: NsVariant) -> Result<HamiltonianFamily> {
        let a1 = NsLabel::A1.vector();
        let bridge = &a1 * NsLabel::A2.vector().adjoint();
        let drive = &a1 * variant.mover().adjoint();
        let i = C64::new(0.0, 1.0);
        let terms = vec![
            Term {
                op: self.lift(&(&drive + drive.adjoint()))?,
                coeff: |p| p.j_scale * p.theta.sin() * p.phi.cos(),
            },
            Term {
                op: self.lift(&((&drive - drive.adjoint()) * i))?,
                coeff: |p| p.j_scale * p.theta.sin() * p.phi.sin(),
            },
            Term {
                op: self.lift(&(&bridge + bridge.adjoint()))?,
                coeff: |p| p.j_scale * p.theta.cos(),
            },
        ];
        HamiltonianFamily::from_terms(variant.family_name(), NS_QUBITS, terms, 1.0)
    }

    /// Logical frame of the sector with doubled magnetic number `m2`.
    pub fn frame(&self, variant: NsVariant, m2: i64) -> Result<LogicalFrame> {
        Ok(LogicalFrame {
            logical: vec![
                self.label(NsLabel::Zero, m2)?,
                self.label(NsLabel::One, m2)?,
            ],
            mover: self.embed(&variant.mover(), m2)?,
            partner: self.label(NsLabel::A2, m2)?,
            protected: Protected::Span(self.block().vectors()),
        })
    }
}

/// `H_NS` for explicit couplings.
pub fn h_ns(code: &NsCode, couplings: &NsCouplings) -> Result<Operator> {
    if !couplings.is_finite() {
        return Err(Error::NonFinite);
    }
    code.lift(&couplings.matrix())
}

#[derive(Clone, Debug)]
pub struct NsHolonomy {
    /// One result per sector, `m` descending.
    pub sectors: Vec<(i64, HolonomyResult)>,
    /// Largest pairwise `1 - F` between sector holonomies.
    pub m_spread: f64,
}

/// Runs the loop in every `m` sector of the noiseless subsystem.
pub fn ns_holonomy(code: &NsCode, variant: NsVariant, lp: &ParameterLoop) -> Result<NsHolonomy> {
    let family = code.family(variant)?;
    let mut sectors = Vec::new();
    for m2 in code.m2_values() {
        let frame = code.frame(variant, m2)?;
        sectors.push((m2, holonomy(&family, lp, &frame)?));
    }
    let mut spread: f64 = 0.0;
    for (a, (_, ra)) in sectors.iter().enumerate() {
        for (_, rb) in sectors.iter().skip(a + 1) {
            spread = spread.max(1.0 - gate_fidelity(&ra.unitary, &rb.unitary)?);
        }
    }
    Ok(NsHolonomy {
        sectors,
        m_spread: spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::{commutator, eigh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn rounded_spectrum(op: &Operator) -> Vec<i64> {
        let (vals, _) = eigh(op).unwrap();
        let mut v: Vec<i64> = vals.iter().map(|x| (x * 4.0).round() as i64).collect();
        v.dedup();
        v
    }

    #[test]
    fn spin_spectra() {
        assert_eq!(
            rounded_spectrum(&collective_spin(1, Axis::Z).unwrap()),
            vec![-2, 2]
        );
        // J(J+1) * 4 for J = 0, 1
        assert_eq!(rounded_spectrum(&s_squared(2).unwrap()), vec![0, 8]);
        // J = 1/2, 3/2, 5/2 -> 3/4, 15/4, 35/4
        assert_eq!(rounded_spectrum(&s_squared(5).unwrap()), vec![3, 15, 35]);
    }

    #[test]
    fn exchange_examples() {
        let e = exchange(1, 2, 2).unwrap();
        let up = QuantumState::basis(2, 0).unwrap();
        let out = e.apply(&up).unwrap();
        assert!((out.amplitudes() - up.amplitudes() * C64::new(0.25, 0.0)).norm() < 1e-15);
        let singlet = QuantumState::superpose(&[
            (
                C64::new(FRAC_1_SQRT_2, 0.0),
                &QuantumState::from_bits("01").unwrap(),
            ),
            (
                C64::new(-FRAC_1_SQRT_2, 0.0),
                &QuantumState::from_bits("10").unwrap(),
            ),
        ])
        .unwrap();
        let out = e.apply(&singlet).unwrap();
        assert!((out.amplitudes() + singlet.amplitudes() * C64::new(0.75, 0.0)).norm() < 1e-15);
        assert_eq!(exchange(2, 2, 3).unwrap_err(), Error::SameQubit(2));

        let s2 = s_squared(5).unwrap();
        let sz = collective_spin(5, Axis::Z).unwrap();
        let e = exchange(2, 5, 5).unwrap();
        assert!(commutator(&e, &s2).max_abs() < 1e-12);
        assert!(commutator(&e, &sz).max_abs() < 1e-12);
    }

    #[test]
    fn multiplicities() {
        let d = cg_decompose(5).unwrap();
        let m: Vec<(String, usize)> = d
            .multiplicities()
            .iter()
            .map(|(j, n)| (j.to_string(), *n))
            .collect();
        assert_eq!(
            m,
            vec![
                ("5/2".to_string(), 1),
                ("3/2".to_string(), 4),
                ("1/2".to_string(), 5)
            ]
        );
        assert_eq!(d.dimension(), 32);
        let d = cg_decompose(2).unwrap();
        assert_eq!(d.multiplicities(), vec![(HalfInt(2), 1), (HalfInt(0), 1)]);
        assert!(cg_decompose(1).is_err());
        assert!(cg_decompose(7).is_err());
    }

    #[test]
    fn multiplicities_match_binomial_oracle() {
        // n_J = C(n, n/2 - J) - C(n, n/2 - J - 1)
        fn binom(n: usize, k: i64) -> usize {
            if k < 0 || k as usize > n {
                return 0;
            }
            let k = k as usize;
            (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
        }
        for n in MIN_QUBITS..=MAX_QUBITS {
            let d = cg_decompose(n).unwrap();
            for b in &d.blocks {
                let k = ((n - b.j2) / 2) as i64;
                assert_eq!(
                    b.multiplicity(),
                    binom(n, k) - binom(n, k - 1),
                    "n={n} J={}",
                    b.j()
                );
            }
        }
    }

    #[test]
    fn decomposition_invariants_all_sizes() {
        for n in MIN_QUBITS..=MAX_QUBITS {
            let c = cg_decompose(n).unwrap().check().unwrap();
            assert!(c.passes(NS_TOL), "n={n}: {c:?}");
        }
    }

    #[test]
    fn exchange_operators_act_on_multiplicity_only() {
        let d = cg_decompose(5).unwrap();
        for l in 1..=5 {
            for m in (l + 1)..=5 {
                let e = exchange(l, m, 5).unwrap();
                for b in &d.blocks {
                    let r = verify_ns(&d, &e, b.j2).unwrap();
                    assert!(
                        r.preserves_block && r.m_independent,
                        "({l},{m}) J={}: {r:?}",
                        b.j()
                    );
                }
            }
        }
    }

    #[test]
    fn collective_and_local_operators() {
        let d = cg_decompose(5).unwrap();
        let r = verify_ns(&d, &collective_spin(5, Axis::Z).unwrap(), 3).unwrap();
        assert!(r.preserves_block);
        assert!(!r.m_independent);
        let a = &r.multiplicity_action;
        assert!((a - DMatrix::<C64>::identity(4, 4) * C64::new(1.5, 0.0)).norm() < 1e-12);
        let r = verify_ns(&d, &pauli(Axis::X, 1, 5).unwrap(), 3).unwrap();
        assert!(!r.preserves_block);
    }

    #[test]
    fn ns_labels_orthonormal() {
        let code = NsCode::new().unwrap();
        let labels = [NsLabel::A1, NsLabel::A2, NsLabel::Zero, NsLabel::One];
        for m2 in code.m2_values() {
            for (i, a) in labels.iter().enumerate() {
                for (j, b) in labels.iter().enumerate() {
                    let ip = code
                        .label(*a, m2)
                        .unwrap()
                        .inner(&code.label(*b, m2).unwrap());
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - C64::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn h_ns_dark_states() {
        let code = NsCode::new().unwrap();
        let c = NsCouplings {
            j_prime: 1.0,
            j0: 0.0,
            j1: 1.0,
            phi: 0.0,
        };
        let h = h_ns(&code, &c).unwrap();
        let p = ControlParams::angles((1.0f64).atan2(1.0), 0.0);
        for m2 in code.m2_values() {
            assert!(h.apply(&code.psi3(&p, m2).unwrap()).unwrap().norm() < 1e-12);
        }
        let r = verify_ns(code.decomposition(), &h, NS_J2).unwrap();
        assert!(r.m_independent && r.preserves_block);
        assert!((r.multiplicity_action.clone() - c.matrix()).norm() < 1e-12);
    }

    #[test]
    fn family_matches_explicit_couplings_and_keeps_dark_states() {
        let code = NsCode::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for variant in [NsVariant::Z, NsVariant::X] {
            let fam = code.family(variant).unwrap();
            for _ in 0..10 {
                let p = ControlParams::angles(rng.gen::<f64>() * PI, rng.gen::<f64>() * TAU);
                let c = match variant {
                    NsVariant::Z => NsCouplings::z_type(&p),
                    NsVariant::X => NsCouplings::x_type(&p),
                };
                let h = fam.build(&p);
                assert!((&h - &h_ns(&code, &c).unwrap()).max_abs() < 1e-13);
                for m2 in code.m2_values() {
                    assert!(
                        h.apply(&code.dark_state(variant, &p, m2).unwrap())
                            .unwrap()
                            .norm()
                            < 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn x_variant_static_dark_state_is_plus() {
        let code = NsCode::new().unwrap();
        let p = ControlParams::angles(0.9, 0.4);
        let h = h_ns(&code, &NsCouplings::x_type(&p)).unwrap();
        let plus = (NsLabel::One.vector() + NsLabel::Zero.vector()) * C64::new(FRAC_1_SQRT_2, 0.0);
        for m2 in code.m2_values() {
            assert!(h.apply(&code.embed(&plus, m2).unwrap()).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn h_ns_commutes_with_collective_spin() {
        let code = NsCode::new().unwrap();
        let h = h_ns(
            &code,
            &NsCouplings {
                j_prime: 0.3,
                j0: -0.7,
                j1: 1.1,
                phi: 0.9,
            },
        )
        .unwrap();
        for axis in Axis::ALL {
            assert!(commutator(&h, &collective_spin(5, axis).unwrap()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn collective_rotation_leaves_multiplicity_state() {
        let code = NsCode::new().unwrap();
        let block = code.block();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = DVector::from_fn(4, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let v = &v / C64::new(v.norm(), 0.0);
        let psi = code.embed(&v, 1).unwrap();
        let before = block.multiplicity_state(&psi);
        let rot = collective_rotation(5, [0.3, -0.8, 0.5], 1.7).unwrap();
        let after = block.multiplicity_state(&rot.apply(&psi).unwrap());
        assert!((before - after).norm() < 1e-12);
    }

    #[test]
    fn flat_ns_loop_is_identity() {
        let code = NsCode::new().unwrap();
        let lp = ParameterLoop::standard(0.0, 20.0, 2000).unwrap();
        let r = ns_holonomy(&code, NsVariant::Z, &lp).unwrap();
        for (_, s) in &r.sectors {
            assert!((&s.unitary - DMatrix::<C64>::identity(2, 2)).norm() < 1e-6);
        }
    }

    #[test]
    fn half_int_display() {
        assert_eq!(HalfInt(3).to_string(), "3/2");
        assert_eq!(HalfInt(4).to_string(), "2");
        assert_eq!(HalfInt(-1).to_string(), "-1/2");
    }
}
