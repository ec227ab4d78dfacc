//! Logical gate targets, fidelities and composition.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hams::FamilyName;
use crate::qops::{C64, ONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateName {
    ZRot,
    XRot,
    CP,
}

impl GateName {
    pub fn as_str(self) -> &'static str {
        match self {
            GateName::ZRot => "Z_rot",
            GateName::XRot => "X_rot",
            GateName::CP => "CP",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            GateName::CP => 4,
            _ => 2,
        }
    }

    /// Gate a loop family is meant to enact.
    pub fn for_family(family: FamilyName) -> Option<Self> {
        match family {
            FamilyName::HZ | FamilyName::HNs => Some(GateName::ZRot),
            FamilyName::HX | FamilyName::HNsX => Some(GateName::XRot),
            FamilyName::H4 => Some(GateName::CP),
            FamilyName::Lambda | FamilyName::General => None,
        }
    }
}

impl fmt::Display for GateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z_rot" => Ok(GateName::ZRot),
            "X_rot" => Ok(GateName::XRot),
            "CP" => Ok(GateName::CP),
            other => Err(Error::InvalidArgument(format!("unknown gate '{other}'"))),
        }
    }
}

/// `Z_rot = diag(1, e^{-i w/2})`, `X_rot = cos(w/4) I + i sin(w/4) X`,
/// `CP = diag(1, 1, 1, e^{i w/2})`.
pub fn target_gate(name: GateName, omega: f64) -> DMatrix<C64> {
    match name {
        GateName::ZRot => diag(&[ONE, C64::from_polar(1.0, -omega / 2.0)]),
        GateName::XRot => {
            let c = C64::new((omega / 4.0).cos(), 0.0);
            let s = C64::new(0.0, (omega / 4.0).sin());
            DMatrix::from_row_slice(2, 2, &[c, s, s, c])
        }
        GateName::CP => diag(&[ONE, ONE, ONE, C64::from_polar(1.0, omega / 2.0)]),
    }
}

fn diag(d: &[C64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(d))
}

/// `|tr(target^dag measured)| / d`, invariant under global phases.
pub fn gate_fidelity(measured: &DMatrix<C64>, target: &DMatrix<C64>) -> Result<f64> {
    if measured.shape() != target.shape() {
        return Err(Error::DimensionMismatch {
            expected: target.nrows(),
            got: measured.nrows(),
        });
    }
    if !measured.is_square() {
        return Err(Error::NotSquare {
            rows: measured.nrows(),
            cols: measured.ncols(),
        });
    }
    let d = measured.nrows() as f64;
    Ok(((target.adjoint() * measured).trace().norm() / d).clamp(0.0, 1.0))
}

/// `min_a |u - e^{ia} v|_F / sqrt(d) = sqrt(2 - 2F)` for unitaries.
pub fn phase_distance(u: &DMatrix<C64>, v: &DMatrix<C64>) -> Result<f64> {
    Ok((2.0 - 2.0 * gate_fidelity(u, v)?).max(0.0).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogicalGate {
    pub name: GateName,
    pub matrix: DMatrix<C64>,
    pub omega: f64,
    /// Fidelity against `target_gate(name, omega)`.
    pub fidelity: f64,
}

impl LogicalGate {
    pub fn target(name: GateName, omega: f64) -> Self {
        Self {
            name,
            matrix: target_gate(name, omega),
            omega,
            fidelity: 1.0,
        }
    }

    /// Wraps a measured unitary and scores it against its target.
    pub fn measured(name: GateName, omega: f64, matrix: DMatrix<C64>) -> Result<Self> {
        let fidelity = gate_fidelity(&matrix, &target_gate(name, omega))?;
        Ok(Self {
            name,
            matrix,
            omega,
            fidelity,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Embeds a one-qubit gate on encoded qubit `factor` (1 = most significant)
    /// of an `n_logical`-qubit register.
    pub fn promote(&self, factor: usize, n_logical: usize) -> Result<DMatrix<C64>> {
        if self.dim() != 2 {
            return Err(Error::Unsupported(format!(
                "only one-qubit gates can be promoted, got dimension {}",
                self.dim()
            )));
        }
        if factor == 0 || factor > n_logical {
            return Err(Error::QubitOutOfRange {
                index: factor,
                n: n_logical,
            });
        }
        let mut out = DMatrix::<C64>::identity(1, 1);
        for k in 1..=n_logical {
            let f = if k == factor {
                self.matrix.clone()
            } else {
                DMatrix::identity(2, 2)
            };
            out = out.kronecker(&f);
        }
        Ok(out)
    }
}

/// Product of `gates` in application order: the first gate acts first.
pub fn compose(gates: &[DMatrix<C64>]) -> Result<DMatrix<C64>> {
    let Some(first) = gates.first() else {
        return Err(Error::InvalidArgument("nothing to compose".into()));
    };
    let d = first.nrows();
    let mut out = DMatrix::identity(d, d);
    for g in gates {
        if g.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: g.nrows(),
            });
        }
        out = g * out;
    }
    Ok(out)
}

/// Number of Schmidt coefficients above `tol` of a two-qubit state.
pub fn schmidt_rank(state: &DVector<C64>, tol: f64) -> Result<usize> {
    if state.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: state.len(),
        });
    }
    let m = DMatrix::from_row_slice(2, 2, state.as_slice());
    Ok(m.singular_values().iter().filter(|s| **s > tol).count())
}

/// `[[1, 1], [1, -1]] / sqrt 2`, the change of basis between `{|0>, |1>}` and `{|+>, |->}`.
pub fn hadamard() -> DMatrix<C64> {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

/// Closest word over `generators` (length `1..=max_len`) to `target` in
/// [`phase_distance`]. Returns the word as generator indices in application
/// order together with its distance.
pub fn closest_word(
    generators: &[DMatrix<C64>],
    max_len: usize,
    target: &DMatrix<C64>,
) -> Result<(Vec<usize>, f64)> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut frontier: Vec<(Vec<usize>, DMatrix<C64>)> = vec![(
        Vec::new(),
        DMatrix::identity(target.nrows(), target.ncols()),
    )];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * generators.len());
        for (word, m) in &frontier {
            for (k, g) in generators.iter().enumerate() {
                let mut w = word.clone();
                w.push(k);
                let prod = g * m;
                let d = phase_distance(&prod, target)?;
                if best.as_ref().is_none_or(|(_, b)| d < *b) {
                    best = Some((w.clone(), d));
                }
                next.push((w, prod));
            }
        }
        frontier = next;
    }
    best.ok_or_else(|| {
        Error::InvalidArgument("need at least one generator and max_len >= 1".into())
    })
}

/// `AB - BA`.
pub fn matrix_commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

/// `true` when `u` is diagonal to within `tol`.
pub fn is_diagonal(u: &DMatrix<C64>, tol: f64) -> bool {
    (0..u.nrows()).all(|r| (0..u.ncols()).all(|c| r == c || u[(r, c)].norm() <= tol))
}

/// `u u^dag = 1` to within `tol` (max entry).
pub fn is_unitary(u: &DMatrix<C64>, tol: f64) -> bool {
    let d = u.nrows();
    (u * u.adjoint() - DMatrix::<C64>::identity(d, d))
        .iter()
        .all(|z| z.norm() <= tol)
}
