//! Controllable Hamiltonians built from the `R` operators and their dark states.
//!
//! Every loop family has the same Lambda structure: an excited state (`a1`)
//! coupled with strength `J cos(theta)` to an ancilla (`a2`) and with
//! `J sin(theta) e^{i w phi}` to a logical state. Its dark state is
//! `cos(theta)|logical> - sin(theta) e^{i w phi}|a2>`, where `w` is the phase
//! winding of the family (1 for the one-qubit families, 2 for the two-qubit
//! product Hamiltonian, whose two factors each contribute `e^{i phi}`).

use std::collections::HashSet;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::dfs::{build_code, product_index, BlockLabel, CodeBasis};
use crate::error::{Error, Result};
use crate::qops::{pauli_product, r_op, Axis, Operator, QuantumState, C64, ONE};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlParams {
    pub theta: f64,
    pub phi: f64,
    pub j_scale: f64,
}

impl ControlParams {
    pub fn new(theta: f64, phi: f64, j_scale: f64) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite()) {
            return Err(Error::InvalidArgument(
                "theta and phi must be finite".into(),
            ));
        }
        if !(j_scale.is_finite() && j_scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "j_scale must be > 0, got {j_scale}"
            )));
        }
        Ok(Self {
            theta,
            phi,
            j_scale,
        })
    }

    /// Unit coupling scale.
    pub fn angles(theta: f64, phi: f64) -> Self {
        Self {
            theta,
            phi,
            j_scale: 1.0,
        }
    }

    /// `(J_24, J_34) = j_scale (sin theta, cos theta)`.
    pub fn couplings(&self) -> (f64, f64) {
        (
            self.j_scale * self.theta.sin(),
            self.j_scale * self.theta.cos(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyName {
    Lambda,
    HZ,
    HX,
    H4,
    HNs,
    HNsX,
    General,
}

impl FamilyName {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyName::Lambda => "lambda",
            FamilyName::HZ => "h_z",
            FamilyName::HX => "h_x",
            FamilyName::H4 => "h_4",
            FamilyName::HNs => "h_ns",
            FamilyName::HNsX => "h_ns_x",
            FamilyName::General => "general",
        }
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lambda" => FamilyName::Lambda,
            "h_z" => FamilyName::HZ,
            "h_x" => FamilyName::HX,
            "h_4" => FamilyName::H4,
            "h_ns" => FamilyName::HNs,
            "h_ns_x" => FamilyName::HNsX,
            "general" => FamilyName::General,
            other => return Err(Error::InvalidArgument(format!("unknown family '{other}'"))),
        })
    }
}

/// Real coefficient of one Hermitian generator.
pub type CoefficientFn = fn(&ControlParams) -> f64;

/// One generator of a family: `H(p) = sum_k coeff_k(p) * op_k`.
#[derive(Clone, Debug)]
pub struct Term {
    pub op: Operator,
    pub coeff: CoefficientFn,
}

/// A Hamiltonian as a function of the control parameters.
#[derive(Clone, Debug)]
pub struct HamiltonianFamily {
    name: FamilyName,
    n_qubits: usize,
    terms: Vec<Term>,
    winding: f64,
    j_scale: f64,
}

fn sin_cos_phi(p: &ControlParams) -> f64 {
    p.j_scale * p.theta.sin() * p.phi.cos()
}
fn sin_sin_phi(p: &ControlParams) -> f64 {
    p.j_scale * p.theta.sin() * p.phi.sin()
}
fn cos_theta(p: &ControlParams) -> f64 {
    p.j_scale * p.theta.cos()
}
fn sin_cos2_phi(p: &ControlParams) -> f64 {
    p.j_scale * p.theta.sin() * p.phi.cos().powi(2)
}
fn sin_cossin_phi(p: &ControlParams) -> f64 {
    p.j_scale * p.theta.sin() * p.phi.cos() * p.phi.sin()
}
fn sin_sin2_phi(p: &ControlParams) -> f64 {
    p.j_scale * p.theta.sin() * p.phi.sin().powi(2)
}

impl HamiltonianFamily {
    /// Family from explicit Hermitian generators.
    pub fn from_terms(
        name: FamilyName,
        n_qubits: usize,
        terms: Vec<Term>,
        winding: f64,
    ) -> Result<Self> {
        let dim = 1usize << n_qubits;
        for t in &terms {
            if t.op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.op.dim(),
                });
            }
            let h = t.op.hermiticity_error();
            if h > 1e-12 {
                return Err(Error::NotHermitian(h));
            }
        }
        Ok(Self {
            name,
            n_qubits,
            terms,
            winding,
            j_scale: 1.0,
        })
    }

    /// `J_24 (R^x_24 cos phi + R^y_24 sin phi) + J_34 R^x_34` on four qubits.
    pub fn h_z() -> Self {
        let terms = vec![
            Term {
                op: r_op(Axis::X, 2, 4, 4).expect("valid pair"),
                coeff: sin_cos_phi,
            },
            Term {
                op: r_op(Axis::Y, 2, 4, 4).expect("valid pair"),
                coeff: sin_sin_phi,
            },
            Term {
                op: r_op(Axis::X, 3, 4, 4).expect("valid pair"),
                coeff: cos_theta,
            },
        ];
        Self::from_terms(FamilyName::HZ, 4, terms, 1.0).expect("hermitian generators")
    }

    /// `J_34 R^x_34 + J_24 [cos phi (R^x_24 - R^x_14) + sin phi (R^y_24 - R^y_14)] / sqrt 2`.
    pub fn h_x() -> Self {
        let diff = |axis| {
            (r_op(axis, 2, 4, 4).expect("valid pair") - r_op(axis, 1, 4, 4).expect("valid pair"))
                * FRAC_1_SQRT_2
        };
        let terms = vec![
            Term {
                op: diff(Axis::X),
                coeff: sin_cos_phi,
            },
            Term {
                op: diff(Axis::Y),
                coeff: sin_sin_phi,
            },
            Term {
                op: r_op(Axis::X, 3, 4, 4).expect("valid pair"),
                coeff: cos_theta,
            },
        ];
        Self::from_terms(FamilyName::HX, 4, terms, 1.0).expect("hermitian generators")
    }

    /// The four-body controlled-phase Hamiltonian between encoded qubits 1 and 2.
    pub fn h_4() -> Self {
        Self::controlled_phase(1, 2, 2).expect("valid block pair")
    }

    /// The `H_4` analogue acting on encoded qubits `i < j` of an
    /// `n_logical`-block code.
    pub fn controlled_phase(i: usize, j: usize, n_logical: usize) -> Result<Self> {
        let idx = cp_indices(i, j, n_logical)?;
        let n = 4 * n_logical;
        let (a, b) = idx.phase_pairs;
        let (c, d) = idx.bridge_pairs;
        let xx = r_product(n, a, Axis::X, b, Axis::X)?;
        let xy = r_product(n, a, Axis::X, b, Axis::Y)? + r_product(n, a, Axis::Y, b, Axis::X)?;
        let yy = r_product(n, a, Axis::Y, b, Axis::Y)?;
        let bridge = r_product(n, c, Axis::X, d, Axis::X)?;
        let terms = vec![
            Term {
                op: xx,
                coeff: sin_cos2_phi,
            },
            Term {
                op: xy,
                coeff: sin_cossin_phi,
            },
            Term {
                op: yy,
                coeff: sin_sin2_phi,
            },
            Term {
                op: bridge,
                coeff: cos_theta,
            },
        ];
        Self::from_terms(FamilyName::H4, n, terms, 2.0)
    }

    pub fn with_j_scale(mut self, j_scale: f64) -> Result<Self> {
        if !(j_scale.is_finite() && j_scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "j_scale must be > 0, got {j_scale}"
            )));
        }
        self.j_scale = j_scale;
        Ok(self)
    }

    pub fn name(&self) -> FamilyName {
        self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Multiplier of `phi` in the phase of the dark state's ancilla component.
    pub fn winding(&self) -> f64 {
        self.winding
    }

    pub fn j_scale(&self) -> f64 {
        self.j_scale
    }

    pub fn params(&self, theta: f64, phi: f64) -> ControlParams {
        ControlParams {
            theta,
            phi,
            j_scale: self.j_scale,
        }
    }

    pub fn coefficients(&self, p: &ControlParams) -> Vec<f64> {
        self.terms.iter().map(|t| (t.coeff)(p)).collect()
    }

    pub fn build(&self, p: &ControlParams) -> Operator {
        let mut h = Operator::zeros(self.dim());
        for t in &self.terms {
            h += &(&t.op * (t.coeff)(p));
        }
        h
    }

    /// `cos(theta)|mover> - sin(theta) e^{i w phi}|partner>`.
    pub fn dark_state(
        &self,
        mover: &QuantumState,
        partner: &QuantumState,
        p: &ControlParams,
    ) -> QuantumState {
        let phase = C64::from_polar(p.theta.sin(), self.winding * p.phi);
        QuantumState::superpose(&[(C64::new(p.theta.cos(), 0.0), mover), (-phase, partner)])
            .expect("equal dimensions")
    }
}

/// `R^alpha_{pair1} R^beta_{pair2}` expanded into Pauli strings.
fn r_product(
    n: usize,
    pair1: (usize, usize),
    alpha: Axis,
    pair2: (usize, usize),
    beta: Axis,
) -> Result<Operator> {
    let expand = |(l, m): (usize, usize), axis: Axis| -> Vec<(f64, [(usize, Axis); 2])> {
        match axis {
            Axis::X => vec![
                (0.5, [(l, Axis::X), (m, Axis::X)]),
                (0.5, [(l, Axis::Y), (m, Axis::Y)]),
            ],
            Axis::Y => vec![
                (0.5, [(l, Axis::X), (m, Axis::Y)]),
                (-0.5, [(l, Axis::Y), (m, Axis::X)]),
            ],
            Axis::Z => vec![
                (0.5, [(m, Axis::Z), (m, Axis::Z)]),
                (-0.5, [(l, Axis::Z), (l, Axis::Z)]),
            ],
        }
    };
    if alpha == Axis::Z || beta == Axis::Z {
        return Ok(&r_op(alpha, pair1.0, pair1.1, n)? * &r_op(beta, pair2.0, pair2.1, n)?);
    }
    let mut out = Operator::zeros(1 << n);
    for (c1, f1) in expand(pair1, alpha) {
        for (c2, f2) in expand(pair2, beta) {
            let factors = [f1[0], f1[1], f2[0], f2[1]];
            out += &(&pauli_product(n, &factors)? * (c1 * c2));
        }
    }
    Ok(out)
}

/// One row of the coupling table of [`h_general`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub l: usize,
    pub m: usize,
    pub jx: f64,
    pub jy: f64,
}

/// `sum (J^x R^x_{lm} + J^y R^y_{lm})`. Each unordered pair may appear once.
pub fn h_general(n: usize, couplings: &[Coupling]) -> Result<Operator> {
    let mut seen = HashSet::new();
    let mut h = Operator::zeros(1 << n);
    for c in couplings {
        let key = (c.l.max(c.m), c.l.min(c.m));
        if !seen.insert(key) {
            return Err(Error::DuplicateCoupling(key.0, key.1));
        }
        h += &(&r_op(Axis::X, c.l, c.m, n)? * c.jx);
        h += &(&r_op(Axis::Y, c.l, c.m, n)? * c.jy);
    }
    Ok(h)
}

/// Three-level system `|e>` (top), `|g1>`, `|g2>` given by basis indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaSystem {
    pub e: usize,
    pub g1: usize,
    pub g2: usize,
    /// `(J_lm, phi_lm)`, coupling `|e><g1|`.
    pub first: (f64, f64),
    /// `(J_ln, phi_ln)`, coupling `|e><g2|`.
    pub second: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DarkSpan {
    Single(QuantumState),
    /// Both couplings vanish, so all of `span{g1, g2}` is dark.
    Degenerate([QuantumState; 2]),
}

/// Lambda Hamiltonian on `n` qubits and its dark state.
pub fn h_lambda(sys: &LambdaSystem, n: usize) -> Result<(Operator, DarkSpan)> {
    if sys.e == sys.g1 || sys.e == sys.g2 || sys.g1 == sys.g2 {
        return Err(Error::InvalidArgument(
            "Lambda labels must be distinct".into(),
        ));
    }
    let e = QuantumState::basis(n, sys.e)?;
    let g1 = QuantumState::basis(n, sys.g1)?;
    let g2 = QuantumState::basis(n, sys.g2)?;
    let c1 = C64::from_polar(sys.first.0, sys.first.1);
    let c2 = C64::from_polar(sys.second.0, sys.second.1);
    let half = Operator::outer(&e, &g1).scale(c1) + Operator::outer(&e, &g2).scale(c2);
    let h = &half + &half.adjoint();
    if sys.first.0 == 0.0 && sys.second.0 == 0.0 {
        return Ok((h, DarkSpan::Degenerate([g1, g2])));
    }
    let dark = QuantumState::superpose(&[(c1, &g2), (-c2, &g1)])?.normalized()?;
    Ok((h, DarkSpan::Single(dark)))
}

/// `H_lmn = sum_{j = m, n} J_jl (R^x_jl cos phi_jl + R^y_jl sin phi_jl)`, the
/// R-operator form whose restriction to `{|e>, |g1>, |g2>}` is a Lambda system
/// with `|e>` excited on `l`, `|g1>` on `m`, `|g2>` on `n`.
pub fn h_lmn(
    l: usize,
    m: usize,
    n: usize,
    n_qubits: usize,
    first: (f64, f64),
    second: (f64, f64),
) -> Result<Operator> {
    let leg = |j: usize, (coupling, phase): (f64, f64)| -> Result<Operator> {
        Ok(
            &(&r_op(Axis::X, j, l, n_qubits)? * (coupling * phase.cos()))
                + &(&r_op(Axis::Y, j, l, n_qubits)? * (coupling * phase.sin())),
        )
    };
    Ok(leg(m, first)? + leg(n, second)?)
}

/// Direct `H_Z(p)` on four qubits.
pub fn h_z(p: &ControlParams) -> Operator {
    let (j24, j34) = p.couplings();
    let x24 = r_op(Axis::X, 2, 4, 4).expect("valid pair");
    let y24 = r_op(Axis::Y, 2, 4, 4).expect("valid pair");
    let x34 = r_op(Axis::X, 3, 4, 4).expect("valid pair");
    &(&(&x24 * p.phi.cos()) + &(&y24 * p.phi.sin())) * j24 + &x34 * j34
}

/// Direct `H_X(p)` on four qubits.
pub fn h_x(p: &ControlParams) -> Operator {
    let (j24, j34) = p.couplings();
    let r = |axis, l| r_op(axis, l, 4, 4).expect("valid pair");
    let dx = (r(Axis::X, 2) - r(Axis::X, 1)) * FRAC_1_SQRT_2;
    let dy = (r(Axis::Y, 2) - r(Axis::Y, 1)) * FRAC_1_SQRT_2;
    &r(Axis::X, 3) * j34 + (&dx * p.phi.cos() + &dy * p.phi.sin()) * j24
}

/// Direct `H_4(p)` on eight qubits, multiplying the two rotated `R` factors.
pub fn h_4(p: &ControlParams) -> Operator {
    cp_hamiltonian(p, &cp_indices(1, 2, 2).expect("valid pair"), 8).expect("valid indices")
}

/// `J_a (R^x cos phi + R^y sin phi)_{pair a1} (R^x cos phi + R^y sin phi)_{pair a2}
///  + J_b R^x_{pair b1} R^x_{pair b2}` with `(J_a, J_b) = j (sin theta, cos theta)`.
pub fn cp_hamiltonian(p: &ControlParams, idx: &CpIndices, n: usize) -> Result<Operator> {
    let (ja, jb) = p.couplings();
    let rot = |(l, m): (usize, usize)| -> Result<Operator> {
        Ok(&(&r_op(Axis::X, l, m, n)? * p.phi.cos()) + &(&r_op(Axis::Y, l, m, n)? * p.phi.sin()))
    };
    let (a1, a2) = idx.phase_pairs;
    let (b1, b2) = idx.bridge_pairs;
    let phase = &rot(a1)? * &rot(a2)?;
    let bridge = &r_op(Axis::X, b1.0, b1.1, n)? * &r_op(Axis::X, b2.0, b2.1, n)?;
    Ok(&phase * ja + &bridge * jb)
}

/// Physical qubit pairs of the controlled-phase Hamiltonian between encoded
/// qubits `i` and `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CpIndices {
    /// `(4(i-1)+2, 4(i-1)+4)` and `(4(j-1)+2, 4(j-1)+4)`: the phase-carrying factor.
    pub phase_pairs: ((usize, usize), (usize, usize)),
    /// `(4(i-1)+3, 4(i-1)+4)` and `(4(j-1)+3, 4(j-1)+4)`: the ancilla bridge.
    pub bridge_pairs: ((usize, usize), (usize, usize)),
}

pub fn cp_indices(i: usize, j: usize, n_logical: usize) -> Result<CpIndices> {
    if i == 0 || j == 0 || i > n_logical || j > n_logical || i >= j {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= i < j <= N, got i={i}, j={j}, N={n_logical}"
        )));
    }
    let off = |k: usize| 4 * (k - 1);
    Ok(CpIndices {
        phase_pairs: ((off(i) + 2, off(i) + 4), (off(j) + 2, off(j) + 4)),
        bridge_pairs: ((off(i) + 3, off(i) + 4), (off(j) + 3, off(j) + 4)),
    })
}

fn one_block() -> CodeBasis {
    build_code(1).expect("one block")
}

/// `|+>_L = (|1>_L + |0>_L)/sqrt 2` (with `+`) or `|->_L` (with `-`).
pub fn plus_minus(sign: f64) -> QuantumState {
    let code = one_block();
    QuantumState::superpose(&[
        (C64::new(FRAC_1_SQRT_2, 0.0), &code.logical_state(1)),
        (C64::new(sign * FRAC_1_SQRT_2, 0.0), &code.logical_state(0)),
    ])
    .expect("same space")
}

fn block_ket(label: BlockLabel) -> QuantumState {
    QuantumState::basis(4, product_index(&[label])).expect("four qubits")
}

/// `|Psi_1> = cos(theta)|1>_L - sin(theta) e^{i phi}|a2>`.
pub fn psi1(p: &ControlParams) -> QuantumState {
    HamiltonianFamily::h_z().dark_state(&block_ket(BlockLabel::One), &block_ket(BlockLabel::A2), p)
}

/// `|Psi_2> = cos(theta)|->_L - sin(theta) e^{i phi}|a2>`.
pub fn psi2(p: &ControlParams) -> QuantumState {
    HamiltonianFamily::h_x().dark_state(&plus_minus(-1.0), &block_ket(BlockLabel::A2), p)
}

/// Dark state of `H_4` in the `{|11>_L, |a2 a2>}` plane:
/// `cos(theta)|11>_L - sin(theta) e^{2 i phi}|a2 a2>`.
pub fn h4_dark_state(p: &ControlParams) -> QuantumState {
    let mover = QuantumState::basis(8, product_index(&[BlockLabel::One, BlockLabel::One]))
        .expect("eight qubits");
    let partner = QuantumState::basis(8, product_index(&[BlockLabel::A2, BlockLabel::A2]))
        .expect("eight qubits");
    HamiltonianFamily::h_4().dark_state(&mover, &partner, p)
}

/// The literal two-qubit dark-state expression with a single `e^{i phi}`.
/// It is annihilated by `H_4` only where `e^{i phi} = e^{2 i phi}`.
pub fn h4_dark_state_single_phase(p: &ControlParams) -> QuantumState {
    let mover = QuantumState::basis(8, product_index(&[BlockLabel::One, BlockLabel::One]))
        .expect("eight qubits");
    let partner = QuantumState::basis(8, product_index(&[BlockLabel::A2, BlockLabel::A2]))
        .expect("eight qubits");
    QuantumState::superpose(&[
        (C64::new(p.theta.cos(), 0.0), &mover),
        (-C64::from_polar(p.theta.sin(), p.phi), &partner),
    ])
    .expect("same space")
}

/// `sum_k c_k |psi_k>` convenience used by tests and examples.
pub fn combine(terms: &[(f64, &QuantumState)]) -> QuantumState {
    let t: Vec<(C64, &QuantumState)> = terms.iter().map(|(c, s)| (ONE * *c, *s)).collect();
    QuantumState::superpose(&t).expect("same space")
}
