//! Dense operator algebra on n-qubit spaces.
//!
//! Basis convention: qubit `l` (1-based) is bit `l - 1` of the computational
//! basis index, and `|0>`/`|1>` are the `+1`/`-1` eigenstates of `Z`. A ket
//! written `|b_n ... b_2 b_1>` therefore has index `sum_l b_l 2^(l-1)`, so the
//! four-qubit kets `|0001>, |0010>, |0100>, |1000>` sit at indices 1, 2, 4, 8
//! and carry their excitation on qubits 1, 2, 3, 4 respectively.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default cut-off below which an eigenvalue counts as zero.
pub const NULL_TOL: f64 = 1e-9;

/// Pauli axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown axis '{other}'"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

fn qubit_dim(n_qubits: usize) -> Result<usize> {
    if n_qubits == 0 || n_qubits > 16 {
        return Err(Error::Unsupported(format!("{n_qubits} qubits")));
    }
    Ok(1usize << n_qubits)
}

fn log2_exact(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotQubitSpace(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Pure state of `n_qubits` qubits as a dense amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amplitudes: DVector<C64>,
}

impl QuantumState {
    pub fn new(n_qubits: usize, amplitudes: DVector<C64>) -> Result<Self> {
        let dim = qubit_dim(n_qubits)?;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: amplitudes.len(),
            });
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Infers the qubit count from the vector length.
    pub fn from_amplitudes(amplitudes: DVector<C64>) -> Result<Self> {
        let n = log2_exact(amplitudes.len())?;
        Self::new(n, amplitudes)
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        let dim = qubit_dim(n_qubits)?;
        Ok(Self {
            n_qubits,
            amplitudes: DVector::zeros(dim),
        })
    }

    /// Computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        if index >= s.dim() {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        s.amplitudes[index] = ONE;
        Ok(s)
    }

    /// Parses a ket string such as `"0010"`; the rightmost character is qubit 1.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let n = bits.len();
        let mut index = 0usize;
        for (pos, c) in bits.chars().rev().enumerate() {
            match c {
                '0' => {}
                '1' => index |= 1 << pos,
                _ => {
                    return Err(Error::InvalidArgument(format!("bad ket string '{bits}'")));
                }
            }
        }
        Self::basis(n, index)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        self.amplitudes.unscale_mut(n);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// Fails unless the norm is 1 within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    /// `<self|other>`
    pub fn inner(&self, other: &QuantumState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn scaled(&self, c: C64) -> QuantumState {
        QuantumState {
            n_qubits: self.n_qubits,
            amplitudes: &self.amplitudes * c,
        }
    }

    /// Linear combination `sum_k c_k |psi_k>` of equally sized states.
    pub fn superpose(terms: &[(C64, &QuantumState)]) -> Result<QuantumState> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty superposition".into()))?;
        let mut out = DVector::zeros(first.1.dim());
        for (c, s) in terms {
            if s.dim() != out.len() {
                return Err(Error::DimensionMismatch {
                    expected: out.len(),
                    got: s.dim(),
                });
            }
            out.axpy(*c, &s.amplitudes, ONE);
        }
        QuantumState::new(first.1.n_qubits, out)
    }
}

/// Square complex matrix acting on a state space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    entries: DMatrix<C64>,
}

impl Operator {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
        }
    }

    /// `|ket><bra|`
    pub fn outer(ket: &QuantumState, bra: &QuantumState) -> Self {
        Self {
            entries: ket.amplitudes() * bra.amplitudes().adjoint(),
        }
    }

    /// Orthogonal projector onto the span of orthonormal `states`.
    pub fn projector(dim: usize, states: &[QuantumState]) -> Self {
        let mut p = DMatrix::zeros(dim, dim);
        for s in states {
            p += s.amplitudes() * s.amplitudes().adjoint();
        }
        Self { entries: p }
    }

    /// Diagonal projector onto a set of computational basis states.
    pub fn basis_projector(dim: usize, indices: &[usize]) -> Self {
        let mut p = DMatrix::zeros(dim, dim);
        for &i in indices {
            p[(i, i)] = ONE;
        }
        Self { entries: p }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            entries: &self.entries * c,
        }
    }

    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.dim(),
            });
        }
        QuantumState::new(state.n_qubits(), &self.entries * state.amplitudes())
    }

    /// `<bra|self|ket>`
    pub fn element(&self, bra: &QuantumState, ket: &QuantumState) -> C64 {
        bra.amplitudes().dotc(&(&self.entries * ket.amplitudes()))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `max |M - M^dagger|` entrywise.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Restriction `B^dagger M B` to the span of the given states.
    pub fn restrict(&self, basis: &[QuantumState]) -> DMatrix<C64> {
        let k = basis.len();
        DMatrix::from_fn(k, k, |a, b| self.element(&basis[a], &basis[b]))
    }

    /// Kronecker product `self ⊗ other`; `self` occupies the high-order bits.
    pub fn kron(&self, other: &Operator) -> Operator {
        Operator {
            entries: self.entries.kronecker(&other.entries),
        }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator {
            entries: self.entries + rhs.entries,
        }
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.entries += &rhs.entries;
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            entries: &self.entries - &rhs.entries,
        }
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator {
            entries: self.entries - rhs.entries,
        }
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator {
            entries: -self.entries,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            entries: &self.entries * &rhs.entries,
        }
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator {
            entries: self.entries * rhs.entries,
        }
    }
}

impl Mul<C64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        Operator {
            entries: self.entries * rhs,
        }
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        Operator {
            entries: self.entries * C64::new(rhs, 0.0),
        }
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        Operator {
            entries: &self.entries * C64::new(rhs, 0.0),
        }
    }
}

/// `[a, b] = ab - ba`
pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    &(a * b) - &(b * a)
}

fn check_qubit(l: usize, n: usize) -> Result<()> {
    if l == 0 || l > n {
        return Err(Error::QubitOutOfRange { index: l, n });
    }
    Ok(())
}

/// Tensor product of single-qubit Paulis on the listed qubits (identity
/// elsewhere). Each column has exactly one non-zero entry, so the matrix is
/// filled directly instead of through Kronecker products.
pub fn pauli_product(n: usize, factors: &[(usize, Axis)]) -> Result<Operator> {
    let dim = qubit_dim(n)?;
    let mut flip = 0usize;
    for &(l, _) in factors {
        check_qubit(l, n)?;
    }
    for &(l, axis) in factors {
        if axis != Axis::Z {
            flip ^= 1 << (l - 1);
        }
    }
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        // Apply factors right to left; each one only needs the current bit.
        let mut phase = ONE;
        let mut idx = col;
        for &(l, axis) in factors.iter().rev() {
            let bit = (idx >> (l - 1)) & 1;
            match axis {
                Axis::X => idx ^= 1 << (l - 1),
                Axis::Y => {
                    // Y|0> = i|1>, Y|1> = -i|0>
                    phase *= if bit == 0 { I } else { -I };
                    idx ^= 1 << (l - 1);
                }
                Axis::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        debug_assert_eq!(idx, col ^ flip);
        m[(idx, col)] += phase;
    }
    Ok(Operator { entries: m })
}

/// `sigma_axis` on qubit `l` of `n`.
pub fn pauli(axis: Axis, l: usize, n: usize) -> Result<Operator> {
    pauli_product(n, &[(l, axis)])
}

/// Exchange-type operators on the pair `(l, m)`:
/// `R^x = (X_l X_m + Y_l Y_m)/2`, `R^y = (X_l Y_m - Y_l X_m)/2`,
/// `R^z = (Z_m - Z_l)/2`.
///
/// On `span{|1_l 0_m>, |0_l 1_m>}` (in that order) they act as the Pauli
/// matrices; they vanish on `|0_l 0_m>` and `|1_l 1_m>`.
pub fn r_op(axis: Axis, l: usize, m: usize, n: usize) -> Result<Operator> {
    check_qubit(l, n)?;
    check_qubit(m, n)?;
    if l == m {
        return Err(Error::SameQubit(l));
    }
    let half = 0.5;
    let op = match axis {
        Axis::X => {
            pauli_product(n, &[(l, Axis::X), (m, Axis::X)])?
                + pauli_product(n, &[(l, Axis::Y), (m, Axis::Y)])?
        }
        Axis::Y => {
            pauli_product(n, &[(l, Axis::X), (m, Axis::Y)])?
                - pauli_product(n, &[(l, Axis::Y), (m, Axis::X)])?
        }
        Axis::Z => pauli(Axis::Z, m, n)? - pauli(Axis::Z, l, n)?,
    };
    Ok(op * half)
}

/// `Z = sum_i Z_i`.
pub fn collective_z(n: usize) -> Result<Operator> {
    let dim = qubit_dim(n)?;
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = C64::new(collective_z_eigenvalue(n, i), 0.0);
    }
    Ok(Operator { entries: m })
}

/// Eigenvalue of `sum_i Z_i` on basis state `index`: `n - 2 * popcount`.
pub fn collective_z_eigenvalue(n: usize, index: usize) -> f64 {
    n as f64 - 2.0 * index.count_ones() as f64
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn eigh(a: &Operator) -> Result<(Vec<f64>, DMatrix<C64>)> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let herm = a.hermiticity_error();
    if herm > 1e-10 * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian(herm));
    }
    // Symmetrize so round-off in the lower triangle does not leak in.
    let sym = (a.matrix() + a.matrix().adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.dim(), a.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `exp(scale * A)`.
///
/// Hermitian `A` goes through its eigendecomposition; anything else through
/// scaling and squaring of a Taylor polynomial.
pub fn mat_exp(a: &Operator, scale: C64) -> Result<Operator> {
    if !a.is_finite() || !(scale.re.is_finite() && scale.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if a.is_hermitian(1e-12 * a.max_abs().max(1.0)) {
        let (values, v) = eigh(a)?;
        let phases =
            DVector::from_iterator(values.len(), values.iter().map(|&e| (scale * e).exp()));
        let mut left = v.clone();
        for (j, mut col) in left.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        return Ok(Operator {
            entries: left * v.adjoint(),
        });
    }
    Ok(Operator {
        entries: expm_general(&(a.matrix() * scale)),
    })
}

fn one_norm(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn expm_general(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    let norm = one_norm(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m * C64::new(0.5f64.powi(squarings as i32), 0.0);
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &scaled * C64::new(1.0 / k as f64, 0.0);
        sum += &term;
        if one_norm(&term) < 1e-18 * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Orthonormal basis of the (numerical) kernel of a Hermitian operator.
///
/// Vectors are produced deterministically: basis directions are visited in
/// order of descending weight `<i|P|i>` in the kernel projector `P` (ties,
/// compared at 1e-9, broken by index) and Gram-Schmidt is applied to `P|i>`.
pub fn null_space(a: &Operator, tol: f64) -> Result<Vec<QuantumState>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::BadTolerance(tol));
    }
    let n_qubits = log2_exact(a.dim())?;
    let (values, vectors) = eigh(a)?;
    let kernel: Vec<usize> = (0..values.len())
        .filter(|&k| values[k].abs() < tol)
        .collect();
    if kernel.is_empty() {
        return Ok(Vec::new());
    }
    let dim = a.dim();
    let mut p = DMatrix::<C64>::zeros(dim, dim);
    for &k in &kernel {
        let v = vectors.column(k);
        p += v * v.adjoint();
    }
    let mut order: Vec<usize> = (0..dim).collect();
    let key = |i: usize| (p[(i, i)].re * 1e9).round() as i64;
    order.sort_by(|&i, &j| key(j).cmp(&key(i)).then(i.cmp(&j)));

    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(kernel.len());
    for i in order {
        if basis.len() == kernel.len() {
            break;
        }
        let mut v: DVector<C64> = p.column(i).into_owned();
        for u in &basis {
            let c = u.dotc(&v);
            v.axpy(-c, u, ONE);
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v.unscale(norm));
        }
    }
    basis
        .into_iter()
        .map(|v| QuantumState::new(n_qubits, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket(bits: &str) -> QuantumState {
        QuantumState::from_bits(bits).unwrap()
    }

    fn close(a: &Operator, b: &Operator) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn pauli_z_eigenvalue_convention() {
        let z = pauli(Axis::Z, 1, 1).unwrap();
        let out = z.apply(&ket("0")).unwrap();
        assert_eq!(out, ket("0"));
        let out = z.apply(&ket("1")).unwrap();
        assert_eq!(out, ket("1").scaled(-ONE));
    }

    #[test]
    fn pauli_x_flips_requested_qubit() {
        // qubit 2 of 2 is the high-order bit
        let x = pauli(Axis::X, 2, 2).unwrap();
        assert_eq!(x.apply(&ket("00")).unwrap(), ket("10"));
        let x1 = pauli(Axis::X, 1, 2).unwrap();
        assert_eq!(x1.apply(&ket("00")).unwrap(), ket("01"));
    }

    #[test]
    fn paulis_are_hermitian_involutions() {
        for axis in Axis::ALL {
            for l in 1..=3 {
                let p = pauli(axis, l, 3).unwrap();
                assert!(p.is_hermitian(0.0));
                assert!(close(&(&p * &p), &Operator::identity(8)) < 1e-15);
            }
        }
    }

    #[test]
    fn y_matches_matrix() {
        let y = pauli(Axis::Y, 1, 1).unwrap();
        assert_eq!(y.get(0, 1), -I);
        assert_eq!(y.get(1, 0), I);
    }

    #[test]
    fn pauli_index_errors() {
        assert!(matches!(
            pauli(Axis::X, 0, 2),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert!(matches!(
            pauli(Axis::X, 3, 2),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert_eq!(r_op(Axis::X, 2, 2, 3), Err(Error::SameQubit(2)));
    }

    #[test]
    fn r_x_swaps_single_excitation() {
        let rx = r_op(Axis::X, 1, 2, 2).unwrap();
        assert_eq!(rx.apply(&ket("01")).unwrap(), ket("10"));
        assert_eq!(rx.apply(&ket("00")).unwrap().norm(), 0.0);
        assert_eq!(rx.apply(&ket("11")).unwrap().norm(), 0.0);
    }

    #[test]
    fn r_commutator_by_explicit_product() {
        // 4x4 products written out by hand in the {|00>,|01>,|10>,|11>} basis
        // with qubit 1 the low bit: R^x = |01><10| + |10><01|,
        // R^y|01> = -i|10> is the (|10>, |01>) = -i entry.
        let mut rx = DMatrix::<C64>::zeros(4, 4);
        rx[(1, 2)] = ONE;
        rx[(2, 1)] = ONE;
        let mut ry = DMatrix::<C64>::zeros(4, 4);
        // pair (l, m) = (1, 2): |1_l 0_m> = index 1, |0_l 1_m> = index 2
        ry[(1, 2)] = -I;
        ry[(2, 1)] = I;
        let mut rz = DMatrix::<C64>::zeros(4, 4);
        rz[(1, 1)] = ONE;
        rz[(2, 2)] = -ONE;
        let expect = (&rx * &ry - &ry * &rx) * C64::new(0.0, -0.5);
        assert!((expect - &rz).norm() < 1e-15);

        let bx = r_op(Axis::X, 1, 2, 2).unwrap();
        let by = r_op(Axis::Y, 1, 2, 2).unwrap();
        let bz = r_op(Axis::Z, 1, 2, 2).unwrap();
        assert!((bx.matrix() - &rx).norm() < 1e-15);
        assert!((by.matrix() - &ry).norm() < 1e-15);
        assert!((bz.matrix() - &rz).norm() < 1e-15);
        let c = commutator(&bx, &by);
        assert!(close(&c, &bz.scale(C64::new(0.0, 2.0))) < 1e-15);
    }

    #[test]
    fn su2_closure_all_pairs() {
        for n in 2..=4 {
            for l in 1..=n {
                for m in 1..=n {
                    if l == m {
                        continue;
                    }
                    let [x, y, z] = Axis::ALL.map(|a| r_op(a, l, m, n).unwrap());
                    let two_i = C64::new(0.0, 2.0);
                    assert!(close(&commutator(&x, &y), &z.scale(two_i)) < 1e-12);
                    assert!(close(&commutator(&y, &z), &x.scale(two_i)) < 1e-12);
                    assert!(close(&commutator(&z, &x), &y.scale(two_i)) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn r_ops_square_to_identity_on_active_pair_only() {
        for n in 2..=4 {
            for l in 1..=n {
                for m in 1..=n {
                    if l == m {
                        continue;
                    }
                    for axis in Axis::ALL {
                        let r = r_op(axis, l, m, n).unwrap();
                        let sq = &r * &r;
                        for i in 0..(1usize << n) {
                            let bl = (i >> (l - 1)) & 1;
                            let bm = (i >> (m - 1)) & 1;
                            let s = QuantumState::basis(n, i).unwrap();
                            if bl != bm {
                                assert!((sq.element(&s, &s) - ONE).norm() < 1e-12);
                            } else {
                                assert!(r.apply(&s).unwrap().norm() < 1e-12);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn collective_z_values() {
        let z4 = collective_z(4).unwrap();
        assert_eq!(z4.element(&ket("1000"), &ket("1000")), C64::new(2.0, 0.0));
        let z1 = collective_z(1).unwrap();
        assert_eq!(z1.apply(&ket("1")).unwrap(), ket("1").scaled(-ONE));
    }

    #[test]
    fn r_ops_commute_with_collective_z() {
        for n in [4usize, 8] {
            let z = collective_z(n).unwrap();
            for l in 1..=n {
                for m in (l + 1)..=n {
                    for axis in Axis::ALL {
                        let r = r_op(axis, l, m, n).unwrap();
                        assert!(commutator(&r, &z).max_abs() < 1e-12, "{axis} {l} {m} {n}");
                    }
                }
            }
        }
    }

    #[test]
    fn mat_exp_of_zero_is_identity() {
        let a = r_op(Axis::Y, 1, 3, 3).unwrap();
        let e = mat_exp(&a, ZERO).unwrap();
        assert!(close(&e, &Operator::identity(8)) < 1e-15);
    }

    #[test]
    fn mat_exp_pauli_closed_form() {
        // exp(-i (pi/2) X) = cos(pi/2) I - i sin(pi/2) X = -i X
        let x = pauli(Axis::X, 1, 1).unwrap();
        let e = mat_exp(&x, C64::new(0.0, -std::f64::consts::FRAC_PI_2)).unwrap();
        assert!(close(&e, &x.scale(-I)) < 1e-14);
    }

    #[test]
    fn mat_exp_general_matches_hermitian_route() {
        // Non-Hermitian generator: i*H is anti-Hermitian, so it takes the
        // Taylor route while H takes the eigen route.
        let h = &r_op(Axis::X, 1, 2, 3).unwrap() + &pauli(Axis::Z, 3, 3).unwrap();
        let anti = h.scale(I);
        let a = mat_exp(&h, C64::new(0.0, -1.3)).unwrap();
        let b = mat_exp(&anti, C64::new(-1.3, 0.0)).unwrap();
        assert!(close(&a, &b) < 1e-12);
        let nilpotent = Operator::new(DMatrix::from_row_slice(
            2,
            2,
            &[ZERO, C64::new(3.0, 0.0), ZERO, ZERO],
        ))
        .unwrap();
        let e = mat_exp(&nilpotent, ONE).unwrap();
        assert!((e.get(0, 1) - C64::new(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn mat_exp_rejects_non_finite() {
        let mut m = DMatrix::<C64>::identity(2, 2);
        m[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert_eq!(
            mat_exp(&Operator::new(m).unwrap(), ONE),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn mat_exp_large_hermitian_is_unitary() {
        let h =
            &(&r_op(Axis::X, 1, 2, 3).unwrap() * 20.0) + &(&pauli(Axis::Y, 3, 3).unwrap() * 13.0);
        let u = mat_exp(&h, C64::new(0.0, -1.0)).unwrap();
        let g = &u.adjoint() * &u;
        assert!(close(&g, &Operator::identity(8)) < 1e-10);
    }

    #[test]
    fn null_space_of_z_is_empty() {
        let z = pauli(Axis::Z, 1, 1).unwrap();
        assert!(null_space(&z, NULL_TOL).unwrap().is_empty());
    }

    #[test]
    fn null_space_of_rx_is_parallel_pair() {
        let rx = r_op(Axis::X, 1, 2, 2).unwrap();
        let ns = null_space(&rx, NULL_TOL).unwrap();
        assert_eq!(ns.len(), 2);
        assert!((ns[0].inner(&ket("00")).norm() - 1.0).abs() < 1e-12);
        assert!((ns[1].inner(&ket("11")).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_rejects_bad_tolerance() {
        let rx = r_op(Axis::X, 1, 2, 2).unwrap();
        assert_eq!(null_space(&rx, 0.0), Err(Error::BadTolerance(0.0)));
        assert_eq!(null_space(&rx, -1.0), Err(Error::BadTolerance(-1.0)));
    }

    #[test]
    fn null_space_is_deterministic() {
        let h = &r_op(Axis::X, 1, 3, 3).unwrap() + &r_op(Axis::Y, 2, 3, 3).unwrap();
        let a = null_space(&h, NULL_TOL).unwrap();
        let b = null_space(&h, NULL_TOL).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn state_construction_errors() {
        assert!(QuantumState::new(2, DVector::zeros(3)).is_err());
        assert!(QuantumState::from_bits("0a1").is_err());
        let mut z = QuantumState::zero(2).unwrap();
        assert_eq!(z.normalize(), Err(Error::ZeroNorm));
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn hermitian(n: usize, re: &[f64], im: &[f64]) -> Operator {
        let dim = 1 << n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                let z = if i == j {
                    C64::new(re[k], 0.0)
                } else {
                    C64::new(re[k], im[k])
                };
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
                k += 1;
            }
        }
        Operator::new(m).unwrap()
    }

    proptest! {
        #[test]
        fn hermitian_exponential_is_unitary(
            re in proptest::collection::vec(-3.0f64..3.0, 36),
            im in proptest::collection::vec(-3.0f64..3.0, 36),
            t in -5.0f64..5.0,
        ) {
            let h = hermitian(3, &re, &im);
            let u = mat_exp(&h, C64::new(0.0, -t)).unwrap();
            let g = &u.adjoint() * &u;
            prop_assert!((&g - &Operator::identity(8)).max_abs() < 1e-10);
        }

        #[test]
        fn null_space_vectors_are_orthonormal_kernel_vectors(
            c in proptest::collection::vec(-2.0f64..2.0, 4),
        ) {
            // Sums of R operators always keep |000> and |111> in the kernel.
            let h = &(&(&r_op(Axis::X, 1, 2, 3).unwrap() * c[0]) + &(&r_op(Axis::Y, 1, 3, 3).unwrap() * c[1]))
                + &(&(&r_op(Axis::X, 2, 3, 3).unwrap() * c[2]) + &(&r_op(Axis::Y, 2, 1, 3).unwrap() * c[3]));
            let tol = NULL_TOL;
            let ns = null_space(&h, tol).unwrap();
            prop_assert!(ns.len() >= 2);
            for (a, va) in ns.iter().enumerate() {
                prop_assert!(h.apply(va).unwrap().norm() < 10.0 * tol);
                for (b, vb) in ns.iter().enumerate() {
                    let expect = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((va.inner(vb) - C64::new(expect, 0.0)).norm() < 1e-10);
                }
            }
        }
    }
}
