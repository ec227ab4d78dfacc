//! Closed loops in the `(theta, phi)` control plane, time-dependent
//! propagation and holonomy readout.
//!
//! A loop is traversed at constant parameter speed on each segment. Step `k`
//! applies `exp(-i H(p_k) dt)` with `p_k` taken at the midpoint of the step.
//! The default integrator expands each family over its fixed generators, keeps
//! the union sparsity pattern and applies the exponential to the state block by
//! a truncated Taylor series; the dense route rebuilds `H` and exponentiates it
//! through its eigendecomposition and is kept for cross-checks.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dfs::{build_code, BlockLabel};
use crate::error::{Error, Result};
use crate::hams::{plus_minus, ControlParams, FamilyName, HamiltonianFamily};
use crate::qops::{mat_exp, Operator, QuantumState, C64, ONE, ZERO};

/// Loops whose end points differ by less than this are closed.
pub const CLOSURE_TOL: f64 = 1e-12;
/// Largest `|H| dt` before a coarse-step warning is attached.
pub const COARSE_STEP: f64 = 1.0;
/// Residual above which a logical state does not count as dark.
pub const DARK_TOL: f64 = 1e-9;
/// Default sweep resolution: steps = round(T / dt).
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_TIME: f64 = 200.0;
pub const DEFAULT_STEPS: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterLoop {
    waypoints: Vec<(f64, f64)>,
    segment_fractions: Vec<f64>,
    total_time: f64,
    steps: usize,
}

impl ParameterLoop {
    pub fn new(
        waypoints: Vec<(f64, f64)>,
        segment_fractions: Vec<f64>,
        total_time: f64,
        steps: usize,
    ) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidLoop("need at least two waypoints".into()));
        }
        if waypoints
            .iter()
            .any(|(t, p)| !(t.is_finite() && p.is_finite()))
        {
            return Err(Error::NonFinite);
        }
        if segment_fractions.len() != waypoints.len() - 1 {
            return Err(Error::InvalidLoop(format!(
                "{} waypoints need {} segment fractions, got {}",
                waypoints.len(),
                waypoints.len() - 1,
                segment_fractions.len()
            )));
        }
        if segment_fractions
            .iter()
            .any(|f| !(f.is_finite() && *f > 0.0))
        {
            return Err(Error::InvalidLoop(
                "segment fractions must be positive".into(),
            ));
        }
        let sum: f64 = segment_fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidLoop(format!(
                "segment fractions sum to {sum}, not 1"
            )));
        }
        let first = waypoints[0];
        let last = waypoints[waypoints.len() - 1];
        let same = (first.0 - last.0).abs() < CLOSURE_TOL && (first.1 - last.1).abs() < CLOSURE_TOL;
        let both_poles = first.0.abs() < CLOSURE_TOL && last.0.abs() < CLOSURE_TOL;
        if !(same || both_poles) {
            return Err(Error::InvalidLoop(format!(
                "open loop: starts at {first:?}, ends at {last:?}"
            )));
        }
        if !(total_time.is_finite() && total_time >= 0.0) {
            return Err(Error::InvalidLoop(format!(
                "total_time must be >= 0, got {total_time}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidLoop("steps must be >= 1".into()));
        }
        Ok(Self {
            waypoints,
            segment_fractions,
            total_time,
            steps,
        })
    }

    /// `(0,0) -> (pi/2,0) -> (pi/2,phi0) -> (0,phi0)`, equal time per segment.
    pub fn standard(phi0: f64, total_time: f64, steps: usize) -> Result<Self> {
        Self::standard_with_theta(std::f64::consts::FRAC_PI_2, phi0, total_time, steps)
    }

    /// The standard loop with its polar excursion stopping at `theta_max`.
    pub fn standard_with_theta(
        theta_max: f64,
        phi0: f64,
        total_time: f64,
        steps: usize,
    ) -> Result<Self> {
        if !(phi0.is_finite() && phi0.abs() < TAU) {
            return Err(Error::InvalidLoop(format!(
                "phi0 must lie in (-2pi, 2pi), got {phi0}"
            )));
        }
        if steps < 3 {
            return Err(Error::InvalidLoop(
                "the standard loop needs steps >= 3".into(),
            ));
        }
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::InvalidLoop(format!(
                "total_time must be > 0, got {total_time}"
            )));
        }
        Self::new(
            vec![(0.0, 0.0), (theta_max, 0.0), (theta_max, phi0), (0.0, phi0)],
            vec![1.0 / 3.0; 3],
            total_time,
            steps,
        )
    }

    pub fn waypoints(&self) -> &[(f64, f64)] {
        &self.waypoints
    }

    pub fn segment_fractions(&self) -> &[f64] {
        &self.segment_fractions
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.steps as f64
    }

    /// Same path traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut w = self.waypoints.clone();
        w.reverse();
        let mut f = self.segment_fractions.clone();
        f.reverse();
        Self {
            waypoints: w,
            segment_fractions: f,
            ..*self
        }
    }

    /// Same path with a new schedule length.
    pub fn with_time(&self, total_time: f64, steps: usize) -> Result<Self> {
        Self::new(
            self.waypoints.clone(),
            self.segment_fractions.clone(),
            total_time,
            steps,
        )
    }

    /// `(theta, phi)` at fraction `s` of the loop, `s` clamped to `[0, 1]`.
    pub fn point_at_fraction(&self, s: f64) -> (f64, f64) {
        let s = s.clamp(0.0, 1.0);
        let mut start = 0.0;
        let last = self.segment_fractions.len() - 1;
        for (k, &f) in self.segment_fractions.iter().enumerate() {
            if s <= start + f || k == last {
                let u = ((s - start) / f).clamp(0.0, 1.0);
                let (t0, p0) = self.waypoints[k];
                let (t1, p1) = self.waypoints[k + 1];
                return (t0 + u * (t1 - t0), p0 + u * (p1 - p0));
            }
            start += f;
        }
        unreachable!("segment fractions are non-empty")
    }

    /// `(theta, phi)` at time `t`.
    pub fn params_at(&self, t: f64) -> (f64, f64) {
        if self.total_time == 0.0 {
            return self.waypoints[0];
        }
        self.point_at_fraction(t / self.total_time)
    }

    fn segments(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        self.waypoints.windows(2).map(|w| (w[0], w[1]))
    }
}

/// `integral_0^1 g(theta_a + s dtheta) ds` for `g = cos(k theta)`.
fn mean_cos(k: f64, a: f64, b: f64) -> f64 {
    let d = b - a;
    if (k * d).abs() < 1e-9 {
        (k * (a + b) / 2.0).cos()
    } else {
        ((k * b).sin() - (k * a).sin()) / (k * d)
    }
}

/// `oint (1 - cos theta) dphi` along the piecewise-linear path.
pub fn solid_angle(lp: &ParameterLoop) -> f64 {
    lp.segments()
        .map(|((ta, pa), (tb, pb))| (pb - pa) * (1.0 - mean_cos(1.0, ta, tb)))
        .sum()
}

/// Berry phase of the dark state `cos(theta)|m> - sin(theta) e^{i w phi}|a>`:
/// `-w oint sin^2(theta) dphi`.
pub fn geometric_phase(lp: &ParameterLoop, winding: f64) -> f64 {
    let area: f64 = lp
        .segments()
        .map(|((ta, pa), (tb, pb))| (pb - pa) * 0.5 * (1.0 - mean_cos(2.0, ta, tb)))
        .sum();
    -winding * area
}

/// Subspace that the dynamics must never leave.
#[derive(Clone, Debug, PartialEq)]
pub enum Protected {
    /// Computational basis indices (a collective-Z eigenspace).
    Indices(Vec<usize>),
    /// Span of orthonormal vectors.
    Span(Vec<QuantumState>),
}

impl Protected {
    /// `1 - |P v|^2` for a normalized `v`, clamped to `[0, 1]`.
    pub fn leakage(&self, v: &DVector<C64>) -> f64 {
        let kept: f64 = match self {
            Protected::Indices(idx) => idx.iter().map(|&i| v[i].norm_sqr()).sum(),
            Protected::Span(states) => states
                .iter()
                .map(|s| s.amplitudes().dotc(v).norm_sqr())
                .sum(),
        };
        (1.0 - kept).clamp(0.0, 1.0)
    }
}

/// The logical basis transported by a family, the state that moves with the
/// dark state, and the subspace the dynamics must respect.
#[derive(Clone, Debug)]
pub struct LogicalFrame {
    pub logical: Vec<QuantumState>,
    pub mover: QuantumState,
    pub partner: QuantumState,
    pub protected: Protected,
}

impl LogicalFrame {
    /// Logical coordinates `<b|mover>`.
    pub fn mover_coordinates(&self) -> DVector<C64> {
        DVector::from_iterator(
            self.logical.len(),
            self.logical.iter().map(|b| b.inner(&self.mover)),
        )
    }

    /// Adiabatic-limit holonomy `1 + (e^{i gamma} - 1)|mu><mu|` on the logical basis.
    pub fn predicted_unitary(&self, gamma: f64) -> DMatrix<C64> {
        let mu = self.mover_coordinates();
        let d = self.logical.len();
        DMatrix::identity(d, d) + (&mu * mu.adjoint()) * (C64::from_polar(1.0, gamma) - ONE)
    }

    fn check_dims(&self, dim: usize) -> Result<()> {
        for s in self.logical.iter().chain([&self.mover, &self.partner]) {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                });
            }
        }
        Ok(())
    }
}

/// Logical frame of a loop family acting on the collective-dephasing code:
/// `h_z` moves `|1>_L`, `h_x` moves `|->_L`, `h_4` moves `|11>_L`.
pub fn code_frame(family: &HamiltonianFamily) -> Result<LogicalFrame> {
    let (n_logical, mover_blocks): (usize, Vec<BlockLabel>) =
        match (family.name(), family.n_qubits()) {
            (FamilyName::HZ | FamilyName::HX, 4) => (1, vec![BlockLabel::One]),
            (FamilyName::H4, 8) => (2, vec![BlockLabel::One, BlockLabel::One]),
            (name, n) => {
                return Err(Error::Unsupported(format!(
                    "no code frame for family {name} on {n} qubits"
                )))
            }
        };
    let code = build_code(n_logical)?;
    let mover = match family.name() {
        FamilyName::HX => plus_minus(-1.0),
        _ => code.ket(&mover_blocks)?,
    };
    let partner = code.ket(&vec![BlockLabel::A2; n_logical])?;
    Ok(LogicalFrame {
        logical: code.logical_states(),
        mover,
        partner,
        protected: Protected::Indices(code.dfs_indices().to_vec()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Sparse generator expansion with a truncated Taylor exponential.
    #[default]
    Taylor,
    /// Dense `H` exponentiated through its eigendecomposition every step.
    Dense,
}

/// State of the propagation after `step` steps.
pub struct StepView<'a> {
    pub step: usize,
    pub time: f64,
    pub theta: f64,
    pub phi: f64,
    pub states: &'a [DVector<C64>],
}

/// Outcome of propagating a block of states around a loop.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub finals: Vec<QuantumState>,
    /// `integral <psi|H|psi> dt` for every state.
    pub dynamical_phases: Vec<f64>,
    /// Largest `|H| dt` over all steps.
    pub max_step_norm: f64,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn final_state(&self) -> &QuantumState {
        &self.finals[0]
    }
}

/// Family stored on the union sparsity pattern of its generators.
struct SparseFamily {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// `term_vals[k][e]`: entry `e` of generator `k`.
    term_vals: Vec<Vec<C64>>,
}

impl SparseFamily {
    fn new(family: &HamiltonianFamily) -> Self {
        let dim = family.dim();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for r in 0..dim {
            for c in 0..dim {
                if family.terms().iter().any(|t| t.op.get(r, c) != ZERO) {
                    cols.push(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let term_vals = family
            .terms()
            .iter()
            .map(|t| {
                let mut vals = Vec::with_capacity(cols.len());
                for r in 0..dim {
                    for &c in &cols[row_ptr[r]..row_ptr[r + 1]] {
                        vals.push(t.op.get(r, c));
                    }
                }
                vals
            })
            .collect();
        Self {
            dim,
            row_ptr,
            cols,
            term_vals,
        }
    }

    fn assemble(&self, coeffs: &[f64], out: &mut [C64]) {
        out.iter_mut().for_each(|v| *v = ZERO);
        for (vals, &c) in self.term_vals.iter().zip(coeffs) {
            if c == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(vals) {
                *o += v * c;
            }
        }
    }

    /// Max absolute row sum, an upper bound on the spectral norm of a Hermitian matrix.
    fn norm_bound(&self, vals: &[C64]) -> f64 {
        (0..self.dim)
            .map(|r| {
                vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|z| z.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    fn matvec(&self, vals: &[C64], x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.dim) {
            let mut acc = ZERO;
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += vals[e] * x[self.cols[e]];
            }
            *out = acc;
        }
    }
}

/// `v <- exp(-i H tau) v` by Taylor series with substeps of size `|H| tau <= 1/2`.
/// Returns `<v|H|v> tau` evaluated on the incoming state.
fn taylor_step(
    sp: &SparseFamily,
    vals: &[C64],
    norm: f64,
    tau: f64,
    v: &mut [C64],
    term: &mut [C64],
    next: &mut [C64],
) -> f64 {
    let subs = ((norm * tau / 0.5).ceil() as usize).max(1);
    let h = tau / subs as f64;
    let mut energy = 0.0;
    for s in 0..subs {
        term.copy_from_slice(v);
        for n in 1..=60 {
            sp.matvec(vals, term, next);
            if s == 0 && n == 1 {
                energy = v
                    .iter()
                    .zip(next.iter())
                    .map(|(a, b)| (a.conj() * b).re)
                    .sum::<f64>()
                    * tau;
            }
            let f = C64::new(0.0, -h / n as f64);
            let mut size = 0.0;
            for ((t, x), y) in term.iter_mut().zip(next.iter()).zip(v.iter_mut()) {
                *t = x * f;
                *y += *t;
                size += t.norm_sqr();
            }
            if size < 1e-34 {
                break;
            }
        }
    }
    energy
}

/// Propagates `states` around `lp` under `family`, calling `observer` once on
/// the initial block and after every step.
pub fn evolve_block(
    family: &HamiltonianFamily,
    lp: &ParameterLoop,
    states: &[QuantumState],
    integrator: Integrator,
    observer: &mut dyn FnMut(&StepView),
) -> Result<Trajectory> {
    let dim = family.dim();
    for s in states {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.dim(),
            });
        }
        s.check_normalized(1e-9)?;
    }
    let mut block: Vec<DVector<C64>> = states.iter().map(|s| s.amplitudes().clone()).collect();
    let mut phases = vec![0.0; block.len()];
    let dt = lp.dt();
    let (t0, p0) = lp.params_at(0.0);
    observer(&StepView {
        step: 0,
        time: 0.0,
        theta: t0,
        phi: p0,
        states: &block,
    });

    let sparse = (integrator == Integrator::Taylor).then(|| SparseFamily::new(family));
    let mut vals = vec![ZERO; sparse.as_ref().map_or(0, |s| s.cols.len())];
    let mut term = vec![ZERO; dim];
    let mut next = vec![ZERO; dim];
    let mut max_step_norm: f64 = 0.0;

    for k in 0..lp.steps() {
        let (theta, phi) = lp.params_at((k as f64 + 0.5) * dt);
        let p = family.params(theta, phi);
        if dt > 0.0 {
            match &sparse {
                Some(sp) => {
                    sp.assemble(&family.coefficients(&p), &mut vals);
                    let norm = sp.norm_bound(&vals);
                    max_step_norm = max_step_norm.max(norm * dt);
                    for (v, ph) in block.iter_mut().zip(phases.iter_mut()) {
                        *ph += taylor_step(
                            sp,
                            &vals,
                            norm,
                            dt,
                            v.as_mut_slice(),
                            &mut term,
                            &mut next,
                        );
                    }
                }
                None => {
                    let h = family.build(&p);
                    let norm = spectral_bound(&h);
                    max_step_norm = max_step_norm.max(norm * dt);
                    let u = mat_exp(&h, C64::new(0.0, -dt))?;
                    for (v, ph) in block.iter_mut().zip(phases.iter_mut()) {
                        *ph += (v.dotc(&(h.matrix() * &*v))).re * dt;
                        *v = u.matrix() * &*v;
                    }
                }
            }
        }
        let (theta, phi) = lp.params_at((k + 1) as f64 * dt);
        observer(&StepView {
            step: k + 1,
            time: (k + 1) as f64 * dt,
            theta,
            phi,
            states: &block,
        });
    }

    let mut warnings = Vec::new();
    if max_step_norm > COARSE_STEP {
        warnings.push(format!(
            "coarse time step: dt*|H| reaches {max_step_norm:.3} (> {COARSE_STEP}); results are not adiabatic-converged"
        ));
    }
    let finals = block
        .into_iter()
        .map(QuantumState::from_amplitudes)
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        finals,
        dynamical_phases: phases,
        max_step_norm,
        warnings,
    })
}

fn spectral_bound(h: &Operator) -> f64 {
    h.matrix()
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Propagates a single state.
pub fn evolve(
    family: &HamiltonianFamily,
    lp: &ParameterLoop,
    psi0: &QuantumState,
) -> Result<Trajectory> {
    evolve_block(
        family,
        lp,
        std::slice::from_ref(psi0),
        Integrator::Taylor,
        &mut |_| {},
    )
}

#[derive(Clone, Debug)]
pub struct HolonomyResult {
    /// Polar factor of the overlap matrix, global phase fixed.
    pub unitary: DMatrix<C64>,
    /// `M_ab = <a_L|psi_b(T)>`.
    pub raw_overlap: DMatrix<C64>,
    /// `max_b (1 - |P_code psi_b(T)|^2)`.
    pub leakage_max: f64,
    /// Largest leakage out of the protected subspace over every step.
    pub protected_leakage_max: f64,
    /// Largest `|integral <psi|H|psi> dt|` over the logical basis.
    pub dynamical_phase_check: f64,
    pub solid_angle_analytic: f64,
    /// Berry phase of the mover predicted by the dark-state connection.
    pub geometric_phase: f64,
    /// Adiabatic-limit holonomy, global phase fixed.
    pub predicted: DMatrix<C64>,
    pub warnings: Vec<String>,
}

impl HolonomyResult {
    /// `arg(U_11 / U_00)` for diagonal-type two-level results.
    pub fn relative_phase(&self) -> f64 {
        relative_phase(&self.unitary, 0, self.unitary.nrows() - 1)
    }

    /// Eigenphase spread of `predicted^dag unitary`.
    pub fn error_vs_prediction(&self) -> f64 {
        phase_error(&self.unitary, &self.predicted)
    }
}

/// `arg(U_jj / U_ii)`.
pub fn relative_phase(u: &DMatrix<C64>, i: usize, j: usize) -> f64 {
    (u[(j, j)] * u[(i, i)].conj()).arg()
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Closest unitary `W V^dag` from the SVD `M = W S V^dag`.
pub fn polar_unitary(m: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = m.clone().svd(true, true);
    let w = svd.u.expect("left vectors requested");
    let vt = svd.v_t.expect("right vectors requested");
    w * vt
}

/// Scales `u` so that its first diagonal entry (or, failing that, its first
/// entry of non-negligible size in row-major order) is real and non-negative.
pub fn fix_global_phase(u: &DMatrix<C64>) -> DMatrix<C64> {
    let pivot = if u[(0, 0)].norm() > 1e-9 {
        Some(u[(0, 0)])
    } else {
        (0..u.nrows())
            .flat_map(|r| (0..u.ncols()).map(move |c| (r, c)))
            .map(|rc| u[rc])
            .find(|z| z.norm() > 1e-6)
    };
    match pivot {
        Some(z) => u * C64::from_polar(1.0, -z.arg()),
        None => u.clone(),
    }
}

/// Spread of the eigenphases of `v^dag u`: zero iff `u = e^{i a} v`, and for
/// diagonal gates the relative-phase error in radians.
pub fn phase_error(u: &DMatrix<C64>, v: &DMatrix<C64>) -> f64 {
    let w = v.adjoint() * u;
    let mut phases: Vec<f64> = match w.clone().eigenvalues() {
        Some(ev) => ev.iter().map(|z| z.arg().rem_euclid(TAU)).collect(),
        None => unitary_eigenphases(&w),
    };
    phases.sort_by(f64::total_cmp);
    if phases.len() < 2 {
        return 0.0;
    }
    let mut gap: f64 = TAU - (phases[phases.len() - 1] - phases[0]);
    for pair in phases.windows(2) {
        gap = gap.max(pair[1] - pair[0]);
    }
    TAU - gap
}

/// Eigenphases of a unitary through the Hermitian pencil `cos(b) A + sin(b) B`
/// with `A = (W + W^dag)/2` and `B = (W - W^dag)/(2i)`.
fn unitary_eigenphases(w: &DMatrix<C64>) -> Vec<f64> {
    let b = 0.618_033_988_749_895_f64;
    let herm = (w + w.adjoint()) * C64::new(0.5 * b.cos(), 0.0)
        + (w - w.adjoint()) * C64::new(0.0, -0.5 * b.sin());
    let eig = herm.symmetric_eigen();
    eig.eigenvectors
        .column_iter()
        .map(|v| v.dotc(&(w * v)).arg().rem_euclid(TAU))
        .collect()
}

/// Transports the logical basis of `frame` around `lp` and reads off the holonomy.
pub fn holonomy(
    family: &HamiltonianFamily,
    lp: &ParameterLoop,
    frame: &LogicalFrame,
) -> Result<HolonomyResult> {
    holonomy_with(family, lp, frame, Integrator::Taylor, &mut |_| {})
}

pub fn holonomy_with(
    family: &HamiltonianFamily,
    lp: &ParameterLoop,
    frame: &LogicalFrame,
    integrator: Integrator,
    observer: &mut dyn FnMut(&StepView),
) -> Result<HolonomyResult> {
    frame.check_dims(family.dim())?;
    let (t0, p0) = lp.waypoints()[0];
    let h0 = family.build(&family.params(t0, p0));
    for (index, s) in frame.logical.iter().enumerate() {
        let residual = h0.apply(s)?.norm();
        if residual > DARK_TOL {
            return Err(Error::NotDark { index, residual });
        }
    }
    let mut protected_leakage: f64 = 0.0;
    let traj = evolve_block(family, lp, &frame.logical, integrator, &mut |view| {
        for v in view.states {
            protected_leakage = protected_leakage.max(frame.protected.leakage(v));
        }
        observer(view);
    })?;

    let d = frame.logical.len();
    let raw = DMatrix::from_fn(d, d, |a, b| frame.logical[a].inner(&traj.finals[b]));
    let leakage_max = (0..d)
        .map(|b| (1.0 - raw.column(b).norm_squared()).clamp(0.0, 1.0))
        .fold(0.0, f64::max);
    let gamma = geometric_phase(lp, family.winding());
    Ok(HolonomyResult {
        unitary: fix_global_phase(&polar_unitary(&raw)),
        raw_overlap: raw,
        leakage_max,
        protected_leakage_max: protected_leakage,
        dynamical_phase_check: traj
            .dynamical_phases
            .iter()
            .fold(0.0, |m, p| m.max(p.abs())),
        solid_angle_analytic: solid_angle(lp),
        geometric_phase: gamma,
        predicted: fix_global_phase(&frame.predicted_unitary(gamma)),
        warnings: traj.warnings,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub total_time: f64,
    pub steps: usize,
    /// Eigenphase spread between the measured and adiabatic-limit holonomies.
    pub phase_error: f64,
    /// Largest leakage out of the protected subspace over the run.
    pub leakage_max: f64,
    /// Final leakage out of the logical code.
    pub code_leakage: f64,
}

/// Runs the loop shape of `template` at every `T` in `times` with
/// `steps = round(T / dt)`. Rows come back in the order of `times`.
pub fn adiabaticity_sweep(
    family: &HamiltonianFamily,
    frame: &LogicalFrame,
    template: &ParameterLoop,
    times: &[f64],
    dt: f64,
) -> Result<Vec<SweepRow>> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "times must be strictly increasing".into(),
        ));
    }
    if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidArgument("times must be positive".into()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    times
        .par_iter()
        .map(|&t| {
            let steps = ((t / dt).round() as usize).max(3);
            let lp = template.with_time(t, steps)?;
            let r = holonomy(family, &lp, frame)?;
            Ok(SweepRow {
                total_time: t,
                steps,
                phase_error: r.error_vs_prediction(),
                leakage_max: r.protected_leakage_max,
                code_leakage: r.leakage_max,
            })
        })
        .collect()
}

/// Fraction of consecutive rows whose phase error decreases.
pub fn trend_fraction(rows: &[SweepRow]) -> f64 {
    if rows.len() < 2 {
        return 0.0;
    }
    let down = rows
        .windows(2)
        .filter(|w| w[1].phase_error < w[0].phase_error)
        .count();
    down as f64 / (rows.len() - 1) as f64
}

/// Unit-scale control point, handy for examples.
pub fn control_at(lp: &ParameterLoop, t: f64) -> ControlParams {
    let (theta, phi) = lp.params_at(t);
    ControlParams::angles(theta, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfs::{build_code, product_index, BlockLabel};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn h_z_frame() -> LogicalFrame {
        let code = build_code(1).unwrap();
        LogicalFrame {
            logical: code.logical_states(),
            mover: code.logical_state(1),
            partner: QuantumState::basis(4, product_index(&[BlockLabel::A2])).unwrap(),
            protected: Protected::Indices(code.dfs_indices().to_vec()),
        }
    }

    #[test]
    fn standard_loop_waypoints() {
        let lp = ParameterLoop::standard(FRAC_PI_2, 10.0, 30).unwrap();
        assert_eq!(
            lp.waypoints(),
            &[
                (0.0, 0.0),
                (FRAC_PI_2, 0.0),
                (FRAC_PI_2, FRAC_PI_2),
                (0.0, FRAC_PI_2)
            ]
        );
        assert!(ParameterLoop::standard(TAU, 10.0, 30).is_err());
        assert!(ParameterLoop::standard(1.0, 10.0, 2).is_err());
        assert!(ParameterLoop::standard(1.0, 0.0, 30).is_err());
    }

    #[test]
    fn open_loops_rejected() {
        let r = ParameterLoop::new(vec![(0.5, 0.0), (0.5, 1.0)], vec![1.0], 1.0, 10);
        assert!(matches!(r, Err(Error::InvalidLoop(_))));
        let r = ParameterLoop::new(
            vec![(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)],
            vec![0.5, 0.6],
            1.0,
            10,
        );
        assert!(r.is_err());
    }

    #[test]
    fn solid_angle_examples() {
        for phi0 in [FRAC_PI_2, PI, 0.3, -1.2] {
            let lp = ParameterLoop::standard(phi0, 1.0, 3).unwrap();
            assert!((solid_angle(&lp) - phi0).abs() < 1e-15);
            assert!((solid_angle(&lp.reversed()) + phi0).abs() < 1e-15);
        }
    }

    #[test]
    fn solid_angle_matches_quadrature() {
        // A tilted loop where every segment contributes.
        let lp = ParameterLoop::new(
            vec![(0.0, 0.0), (1.1, 0.3), (0.7, 2.0), (0.0, 2.5)],
            vec![0.2, 0.5, 0.3],
            1.0,
            10,
        )
        .unwrap();
        let n = 200_000;
        let mut sa = 0.0;
        let mut gp = 0.0;
        for w in lp.waypoints().windows(2) {
            let ((ta, pa), (tb, pb)) = (w[0], w[1]);
            for i in 0..n {
                let s = (i as f64 + 0.5) / n as f64;
                let th = ta + s * (tb - ta);
                sa += (1.0 - th.cos()) * (pb - pa) / n as f64;
                gp += th.sin().powi(2) * (pb - pa) / n as f64;
            }
        }
        assert!((solid_angle(&lp) - sa).abs() < 1e-9);
        assert!((geometric_phase(&lp, 1.0) + gp).abs() < 1e-9);
    }

    #[test]
    fn params_at_constant_speed() {
        let lp = ParameterLoop::standard(PI, 3.0, 30).unwrap();
        assert_eq!(lp.params_at(0.0), (0.0, 0.0));
        let (t, p) = lp.params_at(0.5);
        assert!((t - FRAC_PI_4).abs() < 1e-15 && p == 0.0);
        let (t, p) = lp.params_at(1.5);
        assert!((t - FRAC_PI_2).abs() < 1e-15 && (p - FRAC_PI_2).abs() < 1e-15);
        let (t, p) = lp.params_at(3.0);
        assert!(t.abs() < 1e-15 && (p - PI).abs() < 1e-15);
    }

    #[test]
    fn zero_duration_loop_is_identity() {
        let lp = ParameterLoop::new(
            vec![(0.0, 0.0), (FRAC_PI_2, 0.0), (0.0, 0.0)],
            vec![0.5, 0.5],
            0.0,
            10,
        )
        .unwrap();
        let psi = QuantumState::basis(4, 2).unwrap();
        let out = evolve(&HamiltonianFamily::h_z(), &lp, &psi).unwrap();
        assert_eq!(out.final_state(), &psi);
    }

    #[test]
    fn taylor_and_dense_routes_agree() {
        let fam = HamiltonianFamily::h_x();
        let lp = ParameterLoop::standard(2.0, 6.0, 300).unwrap();
        let states = vec![
            plus_minus(1.0),
            plus_minus(-1.0),
            QuantumState::basis(4, 8).unwrap(),
        ];
        let a = evolve_block(&fam, &lp, &states, Integrator::Taylor, &mut |_| {}).unwrap();
        let b = evolve_block(&fam, &lp, &states, Integrator::Dense, &mut |_| {}).unwrap();
        for (x, y) in a.finals.iter().zip(&b.finals) {
            assert!((x.amplitudes() - y.amplitudes()).norm() < 1e-11);
        }
        for (x, y) in a.dynamical_phases.iter().zip(&b.dynamical_phases) {
            assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn evolution_preserves_norm_with_coarse_steps() {
        let lp = ParameterLoop::standard(PI, 50.0, 10).unwrap();
        let psi = QuantumState::basis(4, 2).unwrap();
        let out = evolve(&HamiltonianFamily::h_z(), &lp, &psi).unwrap();
        assert!((out.final_state().norm() - 1.0).abs() < 1e-10);
        assert!(!out.warnings.is_empty());
    }

    #[test]
    fn zero_logical_is_frozen() {
        let lp = ParameterLoop::standard(PI, 20.0, 2000).unwrap();
        let zero = build_code(1).unwrap().logical_state(0);
        let out = evolve(&HamiltonianFamily::h_z(), &lp, &zero).unwrap();
        assert!((out.final_state().inner(&zero).norm() - 1.0).abs() < 1e-12);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn flat_loop_gives_identity() {
        let lp = ParameterLoop::standard(0.0, 20.0, 2000).unwrap();
        let r = holonomy(&HamiltonianFamily::h_z(), &lp, &h_z_frame()).unwrap();
        let id = DMatrix::<C64>::identity(2, 2);
        assert!((&r.unitary - id).norm() < 1e-6);
    }

    #[test]
    fn holonomy_tracks_connection_phase() {
        let lp = ParameterLoop::standard(PI, 100.0, 10_000).unwrap();
        let r = holonomy(&HamiltonianFamily::h_z(), &lp, &h_z_frame()).unwrap();
        assert!((r.geometric_phase + PI).abs() < 1e-15);
        assert!(r.error_vs_prediction() < 1e-2);
        assert!(r.protected_leakage_max < 1e-10);
        let u = &r.unitary;
        assert!((u * u.adjoint() - DMatrix::<C64>::identity(2, 2)).norm() < 1e-10);
        assert!(u[(0, 0)].im.abs() < 1e-15 && u[(0, 0)].re >= 0.0);
    }

    #[test]
    fn reversed_loop_gives_adjoint() {
        let fam = HamiltonianFamily::h_z();
        let lp = ParameterLoop::standard(1.3, 100.0, 10_000).unwrap();
        let f = holonomy(&fam, &lp, &h_z_frame()).unwrap();
        let b = holonomy(&fam, &lp.reversed(), &h_z_frame()).unwrap();
        assert!(phase_error(&b.unitary, &f.unitary.adjoint()) < 1e-2);
    }

    #[test]
    fn non_dark_origin_rejected() {
        let mut frame = h_z_frame();
        frame.logical[1] = QuantumState::basis(4, 8).unwrap();
        let lp = ParameterLoop::standard(1.0, 1.0, 10).unwrap();
        let r = holonomy(&HamiltonianFamily::h_z(), &lp, &frame);
        assert!(matches!(r, Err(Error::NotDark { index: 1, .. })));
    }

    #[test]
    fn phase_error_properties() {
        let d = |a: f64, b: f64| {
            DMatrix::from_diagonal(&DVector::from_vec(vec![
                C64::from_polar(1.0, a),
                C64::from_polar(1.0, b),
            ]))
        };
        assert!((phase_error(&d(0.0, 0.3), &d(0.0, 0.0)) - 0.3).abs() < 1e-12);
        assert!(phase_error(&d(1.0, 1.3), &d(0.0, 0.3)) < 1e-12);
        assert!((phase_error(&d(0.0, 3.0), &d(0.0, -3.0)) - (TAU - 6.0)).abs() < 1e-12);
        assert_eq!(wrap_angle(3.0 * PI), PI);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn polar_factor_of_scaled_unitary() {
        let u = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, C64::new(0.0, 1.0), ZERO]);
        let p = polar_unitary(&(&u * C64::new(0.7, 0.0)));
        assert!((p - &u).norm() < 1e-14);
        let fixed = fix_global_phase(&u);
        assert!((fixed[(0, 1)] - ONE).norm() < 1e-15);
    }

    #[test]
    fn sweep_validates_times() {
        let lp = ParameterLoop::standard(PI, 1.0, 10).unwrap();
        let fam = HamiltonianFamily::h_z();
        assert!(adiabaticity_sweep(&fam, &h_z_frame(), &lp, &[2.0, 1.0], 0.1).is_err());
        assert!(adiabaticity_sweep(&fam, &h_z_frame(), &lp, &[1.0, 1.0], 0.1).is_err());
        let rows = adiabaticity_sweep(&fam, &h_z_frame(), &lp, &[1.0, 2.0], 0.1).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].steps, 20);
    }
}
