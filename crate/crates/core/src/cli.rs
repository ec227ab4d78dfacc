//! The `holodfs` command line.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad configuration (including
//! unusable output paths). JSON output has sorted keys and numbers rounded to
//! 12 significant digits; CSV output has a header row and LF line endings.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::adiabatic::{
    adiabaticity_sweep, code_frame, holonomy_with, trend_fraction, Integrator, LogicalFrame,
    ParameterLoop, DEFAULT_DT, DEFAULT_STEPS, DEFAULT_TIME,
};
use crate::dfs::{
    basis_superposition, build_code, dephase, DephasingEnsemble, DEFAULT_SAMPLES, DEFAULT_SEED,
};
use crate::error::Error;
use crate::gates::{gate_fidelity, target_gate, GateName};
use crate::hams::{FamilyName, HamiltonianFamily};
use crate::ns::{cg_decompose, NsCode, NsVariant};
use crate::qops::{QuantumState, C64, ONE};
use crate::verify::{json_matrix, json_number, round_sig, run_verify, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "holodfs",
    version,
    about = "Holonomic gates in decoherence-free subspaces"
)]
struct Cli {
    /// Run the command described by a JSON configuration file.
    #[arg(long, value_name = "FILE", global = false)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the invariant suite.
    Verify(VerifyArgs),
    /// Drive one family around the standard loop and report the holonomy.
    LoopSim(LoopArgs),
    /// Holonomy error against total loop time.
    Sweep(SweepArgs),
    /// Clebsch-Gordan decomposition of n qubits.
    Cg(CgArgs),
    /// Collective-dephasing fidelities of a code state and a non-code state.
    NoiseTest(NoiseArgs),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Also write the report as JSON.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Force the named check to fail.
    #[arg(long, hide = true, value_name = "NAME")]
    fail_check: Option<String>,
}

#[derive(Args, Debug)]
struct LoopArgs {
    #[arg(long)]
    family: String,
    #[arg(long, allow_hyphen_values = true)]
    phi0: f64,
    #[arg(long, default_value_t = DEFAULT_TIME)]
    time: f64,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    j_scale: f64,
    /// Keep every n-th step in the CSV trace (default: about 1000 rows).
    #[arg(long)]
    every: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV trace path; the holonomy JSON goes next to it with a `.json` extension.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    family: String,
    #[arg(long, allow_hyphen_values = true)]
    phi0: f64,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    times: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    j_scale: f64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CgArgs {
    #[arg(long)]
    qubits: usize,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// Strict JSON configuration, the file form of one subcommand.
#[derive(Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub family: Option<String>,
    pub phi0: Option<f64>,
    pub total_time: Option<f64>,
    pub steps: Option<usize>,
    pub j_scale: Option<f64>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    /// `sweep` only.
    pub times: Option<Vec<f64>>,
    /// `sweep` only.
    pub dt: Option<f64>,
    /// `cg` only.
    pub qubits: Option<usize>,
    /// `noise-test` only.
    pub samples: Option<usize>,
    /// `loop-sim` only.
    pub every: Option<usize>,
}

enum Outcome {
    Ok,
    Failed(String),
}

enum CliError {
    Config(String),
    Run(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Config(e.to_string())
    }
}

type CliResult = std::result::Result<Outcome, CliError>;

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match (cli.config, cli.command) {
        (Some(path), None) => load_config(&path).and_then(|c| dispatch(config_command(c)?)),
        (None, Some(cmd)) => dispatch(cmd),
        (Some(_), Some(_)) => Err(CliError::Config(
            "use either --config or a subcommand, not both".into(),
        )),
        (None, None) => Err(CliError::Config("no command given; see --help".into())),
    };
    match result {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::Failed(msg)) => {
            eprintln!("holodfs: {msg}");
            EXIT_FAIL
        }
        Err(CliError::Config(msg)) => {
            eprintln!("holodfs: configuration error: {msg}");
            EXIT_CONFIG
        }
        Err(CliError::Run(msg)) => {
            eprintln!("holodfs: {msg}");
            EXIT_FAIL
        }
    }
}

fn load_config(path: &Path) -> std::result::Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(CliError::Config)
}

/// Strict parse of a [`RunConfig`].
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, String> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
    for (name, v) in [
        ("phi0", cfg.phi0),
        ("total_time", cfg.total_time),
        ("j_scale", cfg.j_scale),
        ("dt", cfg.dt),
    ] {
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(format!("{name} must be finite"));
            }
        }
    }
    for (name, v) in [
        ("total_time", cfg.total_time),
        ("j_scale", cfg.j_scale),
        ("dt", cfg.dt),
    ] {
        if let Some(x) = v {
            if x <= 0.0 {
                return Err(format!("{name} must be positive, got {x}"));
            }
        }
    }
    Ok(cfg)
}

fn require<T>(v: Option<T>, field: &str, command: &str) -> std::result::Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("'{command}' needs field '{field}'")))
}

fn config_command(c: RunConfig) -> std::result::Result<Command, CliError> {
    let cmd = c.command.as_str();
    Ok(match cmd {
        "verify" => Command::Verify(VerifyArgs {
            json: c.output_path,
            fail_check: None,
        }),
        "loop-sim" => Command::LoopSim(LoopArgs {
            family: require(c.family, "family", cmd)?,
            phi0: require(c.phi0, "phi0", cmd)?,
            time: c.total_time.unwrap_or(DEFAULT_TIME),
            steps: c.steps.unwrap_or(DEFAULT_STEPS),
            j_scale: c.j_scale.unwrap_or(1.0),
            every: c.every,
            seed: c.seed.unwrap_or(0),
            out: c.output_path,
        }),
        "sweep" => Command::Sweep(SweepArgs {
            family: require(c.family, "family", cmd)?,
            phi0: require(c.phi0, "phi0", cmd)?,
            times: require(c.times, "times", cmd)?,
            dt: c.dt.unwrap_or(DEFAULT_DT),
            j_scale: c.j_scale.unwrap_or(1.0),
            out: c.output_path,
        }),
        "cg" => Command::Cg(CgArgs {
            qubits: require(c.qubits, "qubits", cmd)?,
            out: c.output_path,
        }),
        "noise-test" => Command::NoiseTest(NoiseArgs {
            samples: c.samples.unwrap_or(DEFAULT_SAMPLES),
            seed: c.seed.unwrap_or(DEFAULT_SEED),
            out: c.output_path,
        }),
        other => return Err(CliError::Config(format!("unknown command '{other}'"))),
    })
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Verify(a) => cmd_verify(a),
        Command::LoopSim(a) => cmd_loop_sim(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Cg(a) => cmd_cg(a),
        Command::NoiseTest(a) => cmd_noise_test(a),
    }
}

fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> std::result::Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// JSON to `--out`'s `.json` sibling (with CSV at `--out`) or to stdout.
fn emit(
    out: Option<&Path>,
    csv: Option<&str>,
    report: &Value,
) -> std::result::Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(csv) = csv {
                if path.extension().is_some_and(|e| e == "json") {
                    return Err(CliError::Config(format!(
                        "--out {} would be overwritten by the JSON report; use a .csv path",
                        path.display()
                    )));
                }
                write_file(path, csv)?;
                write_file(&path.with_extension("json"), &to_json_text(report))
            } else {
                write_file(path, &to_json_text(report))
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(to_json_text(report).as_bytes())
                .map_err(|e| CliError::Run(e.to_string()))
        }
    }
}

fn csv_number(x: f64) -> String {
    format!("{:.11e}", round_sig(x))
}

fn cmd_verify(a: VerifyArgs) -> CliResult {
    let report = run_verify(&VerifyOptions {
        corrupt: a.fail_check,
    })?;
    print!("{}", report.to_text());
    if let Some(path) = a.json {
        write_file(&path, &to_json_text(&report.to_json()))?;
    }
    if report.passed() {
        Ok(Outcome::Ok)
    } else {
        let names: Vec<String> = report.failures().iter().map(|c| c.name.clone()).collect();
        Ok(Outcome::Failed(format!(
            "failing checks: {}",
            names.join(", ")
        )))
    }
}

/// A loop family with the frame it transports.
struct Setup {
    family: HamiltonianFamily,
    frame: LogicalFrame,
    gate: GateName,
    ns: Option<NsCode>,
}

fn setup(name: &str, j_scale: f64) -> std::result::Result<Setup, CliError> {
    let family_name: FamilyName = name.parse().map_err(|_| {
        CliError::Config(format!(
            "family '{name}' cannot run a loop; use h_z, h_x, h_4, h_ns or h_ns_x"
        ))
    })?;
    let (family, frame, ns) = match family_name {
        FamilyName::HZ | FamilyName::HX | FamilyName::H4 => {
            let family = match family_name {
                FamilyName::HZ => HamiltonianFamily::h_z(),
                FamilyName::HX => HamiltonianFamily::h_x(),
                _ => HamiltonianFamily::h_4(),
            };
            let frame = code_frame(&family)?;
            (family, frame, None)
        }
        FamilyName::HNs | FamilyName::HNsX => {
            let variant = if family_name == FamilyName::HNs {
                NsVariant::Z
            } else {
                NsVariant::X
            };
            let code = NsCode::new()?;
            let family = code.family(variant)?;
            let m2 = code.m2_values()[0];
            let frame = code.frame(variant, m2)?;
            (family, frame, Some(code))
        }
        _ => {
            return Err(CliError::Config(format!(
                "family '{name}' cannot run a loop; use h_z, h_x, h_4, h_ns or h_ns_x"
            )))
        }
    };
    let gate = GateName::for_family(family_name).expect("loop families have targets");
    Ok(Setup {
        family: family.with_j_scale(j_scale)?,
        frame,
        gate,
        ns,
    })
}

fn cmd_loop_sim(a: LoopArgs) -> CliResult {
    let s = setup(&a.family, a.j_scale)?;
    let lp = ParameterLoop::standard(a.phi0, a.time, a.steps)?;
    let every = a.every.unwrap_or_else(|| (a.steps / 1000).max(1));
    if every == 0 {
        return Err(CliError::Config("--every must be >= 1".into()));
    }
    let mu = s.frame.mover_coordinates();
    let mut csv = String::from("step,theta,phi,leakage,dark_overlap\n");
    let family = &s.family;
    let frame = &s.frame;
    let mut observer = |v: &crate::adiabatic::StepView| {
        if !v.step.is_multiple_of(every) && v.step != a.steps {
            return;
        }
        let leakage = v
            .states
            .iter()
            .map(|x| frame.protected.leakage(x))
            .fold(0.0, f64::max);
        let mut mover: DVector<C64> = DVector::zeros(v.states[0].len());
        for (b, x) in v.states.iter().enumerate() {
            mover += x * mu[b];
        }
        let dark = family.dark_state(&frame.mover, &frame.partner, &family.params(v.theta, v.phi));
        let overlap = dark.amplitudes().dotc(&mover).norm_sqr();
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            v.step,
            csv_number(v.theta),
            csv_number(v.phi),
            csv_number(leakage),
            csv_number(overlap)
        );
    };
    let r = holonomy_with(family, &lp, frame, Integrator::Taylor, &mut observer)?;
    let target = target_gate(s.gate, r.solid_angle_analytic);
    let mut report = json!({
        "family": a.family,
        "phi0": json_number(a.phi0),
        "total_time": json_number(a.time),
        "steps": a.steps,
        "j_scale": json_number(a.j_scale),
        "seed": a.seed,
        "solid_angle": json_number(r.solid_angle_analytic),
        "geometric_phase": json_number(r.geometric_phase),
        "relative_phase": json_number(r.relative_phase()),
        "holonomy": json_matrix(&r.unitary),
        "raw_overlap": json_matrix(&r.raw_overlap),
        "predicted": json_matrix(&r.predicted),
        "target_gate": s.gate.as_str(),
        "target": json_matrix(&target),
        "fidelity": json_number(gate_fidelity(&r.unitary, &target)?),
        "fidelity_vs_prediction": json_number(gate_fidelity(&r.unitary, &r.predicted)?),
        "phase_error_vs_prediction": json_number(r.error_vs_prediction()),
        "leakage_max": json_number(r.leakage_max),
        "protected_leakage_max": json_number(r.protected_leakage_max),
        "dynamical_phase": json_number(r.dynamical_phase_check),
        "warnings": r.warnings,
    });
    if let Some(code) = &s.ns {
        report["ns_m2"] = json!(code.m2_values()[0]);
    }
    emit(
        a.out.as_deref(),
        a.out.as_ref().map(|_| csv.as_str()),
        &report,
    )?;
    Ok(Outcome::Ok)
}

fn cmd_sweep(a: SweepArgs) -> CliResult {
    if a.times.len() < 2 {
        return Err(CliError::Config("sweep needs at least two times".into()));
    }
    let mut times = a.times.clone();
    times.sort_by(f64::total_cmp);
    if times.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Config("sweep times must be distinct".into()));
    }
    let s = setup(&a.family, a.j_scale)?;
    let template = ParameterLoop::standard(a.phi0, times[0], 3)?;
    let rows = adiabaticity_sweep(&s.family, &s.frame, &template, &times, a.dt)?;
    let mut csv = String::from("T,steps,phase_error,leakage,code_leakage\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            csv_number(r.total_time),
            r.steps,
            csv_number(r.phase_error),
            csv_number(r.leakage_max),
            csv_number(r.code_leakage)
        );
    }
    let report = json!({
        "family": a.family,
        "phi0": json_number(a.phi0),
        "dt": json_number(a.dt),
        "rows": rows.iter().map(|r| json!({
            "T": json_number(r.total_time),
            "steps": r.steps,
            "phase_error": json_number(r.phase_error),
            "leakage": json_number(r.leakage_max),
            "code_leakage": json_number(r.code_leakage),
        })).collect::<Vec<_>>(),
        "trend_fraction": json_number(trend_fraction(&rows)),
    });
    emit(
        a.out.as_deref(),
        a.out.as_ref().map(|_| csv.as_str()),
        &report,
    )?;
    Ok(Outcome::Ok)
}

fn cmd_cg(a: CgArgs) -> CliResult {
    let d = cg_decompose(a.qubits)?;
    let c = d.check()?;
    let report = json!({
        "n_qubits": a.qubits,
        "blocks": d.blocks.iter().map(|b| json!({
            "J": b.j().to_string(),
            "j": json_number(b.j().value()),
            "multiplicity": b.multiplicity(),
            "m_count": b.m_count(),
        })).collect::<Vec<_>>(),
        "dimension": c.dimension,
        "expected_dimension": c.expected_dimension,
        "eigen_residual": json_number(c.eigen_residual),
        "lowering_residual": json_number(c.lowering_residual),
        "orthonormality_residual": json_number(c.orthonormality_residual),
        "passed": c.passes(crate::ns::NS_TOL),
    });
    emit(a.out.as_deref(), None, &report)?;
    if c.passes(crate::ns::NS_TOL) {
        Ok(Outcome::Ok)
    } else {
        Ok(Outcome::Failed(
            "decomposition residuals exceed tolerance".into(),
        ))
    }
}

fn cmd_noise_test(a: NoiseArgs) -> CliResult {
    let ens = DephasingEnsemble::uniform(a.samples, a.seed)?;
    let code = build_code(1)?;
    let plus = QuantumState::superpose(&[
        (
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            &code.logical_state(0),
        ),
        (
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            &code.logical_state(1),
        ),
    ])?;
    let mut in_code = dephase(&plus, &ens)?;
    for st in code.logical_states() {
        in_code = in_code.min(dephase(&st, &ens)?);
    }
    let ghz = basis_superposition(4, &[(ONE, 0), (ONE, 15)])?;
    let out_code = dephase(&ghz, &ens)?;
    let report = json!({
        "samples": a.samples,
        "seed": a.seed,
        "in_code_state": "min over |0>_L, |1>_L, (|0>_L + |1>_L)/sqrt 2",
        "in_code_fidelity": json_number(in_code),
        "out_of_code_state": "(|0000> + |1111>)/sqrt 2",
        "out_of_code_fidelity": json_number(out_code),
    });
    emit(a.out.as_deref(), None, &report)?;
    Ok(Outcome::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_config() {
        assert!(parse_config(r#"{"command": "cg", "qubits": 5}"#).is_ok());
        assert!(parse_config(r#"{"command": "cg", "qubitz": 5}"#).is_err());
        assert!(parse_config(r#"{"command": "sweep", "total_time": -1}"#).is_err());
        assert!(parse_config(r#"{"command": "sweep", "j_scale": 0}"#).is_err());
    }

    #[test]
    fn config_maps_to_commands() {
        let c = parse_config(r#"{"command": "loop-sim", "phi0": 1.0}"#).unwrap();
        assert!(matches!(config_command(c), Err(CliError::Config(_))));
        let c = parse_config(r#"{"command": "loop-sim", "phi0": 1.0, "family": "h_z"}"#).unwrap();
        assert!(matches!(config_command(c), Ok(Command::LoopSim(_))));
        let c = parse_config(r#"{"command": "launch"}"#).unwrap();
        assert!(matches!(config_command(c), Err(CliError::Config(_))));
    }

    #[test]
    fn csv_numbers_are_fixed_width_mantissa() {
        assert_eq!(csv_number(0.5), "5.00000000000e-1");
        assert_eq!(csv_number(0.0), "0.00000000000e0");
    }

    #[test]
    fn exit_codes_for_bad_input() {
        assert_eq!(run(["holodfs"]), EXIT_CONFIG);
        assert_eq!(run(["holodfs", "cg", "--qubits", "9"]), EXIT_CONFIG);
        assert_eq!(
            run(["holodfs", "loop-sim", "--family", "general", "--phi0", "1"]),
            EXIT_CONFIG
        );
        assert_eq!(
            run(["holodfs", "sweep", "--family", "h_z", "--phi0", "1", "--times", "5,5"]),
            EXIT_CONFIG
        );
        assert_eq!(
            run(["holodfs", "sweep", "--family", "h_z", "--phi0", "1", "--times", "5"]),
            EXIT_CONFIG
        );
        assert_eq!(run(["holodfs", "--version"]), EXIT_OK);
    }
}
