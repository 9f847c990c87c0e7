//! Command-line front end.

pub mod files;
pub mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::experiment::{
    excitation_order, min_samples, run_experiment, sample_disturbance, seeded_rng, uniform_inputs, PlantModel,
};
use crate::linalg::{max_abs, numerical_rank, RANK_TOL};
use crate::polytope::DisturbanceSet;
use crate::synthesis::{embed_gain, minimize_lambda, synthesize, Certificate, Source, SynthesisError};
use crate::verification::{lyapunov_value, verify_certificate, VerificationReport, DEFAULT_TOL};

use files::{
    read_json, sha256_digest, write_json, CertificateFile, DataBlock, DisturbanceBlock, GenerateConfig, LambdaField,
    LoadedProblem, MatrixRecord, Meta, ProblemFile,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    VerificationFailed(String),
    #[error("{0}")]
    OutsideSet(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::Validation(_) => 1,
            CliError::Infeasible(_) | CliError::VerificationFailed(_) | CliError::OutsideSet(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "datainv", version, about = "Contractive-set state feedback from input/state data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a seeded open-loop experiment and write a problem file.
    Generate {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the synthesis program and write a verified certificate.
    Synthesize {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Contractivity level, or `min` to minimize it.
        #[arg(long)]
        lambda: Option<LambdaField>,
        /// Robust invariance against the problem's disturbance set.
        #[arg(long)]
        robust: bool,
    },
    /// Re-check a certificate against a problem.
    Verify { problem: PathBuf, certificate: PathBuf },
    /// Simulate the closed loop from an initial state.
    Simulate {
        problem: PathBuf,
        certificate: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Output path; CSV goes to standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, out, seed } => cmd_generate(&config, &out, seed).map(|_| ()),
        Command::Synthesize {
            problem,
            out,
            lambda,
            robust,
        } => cmd_synthesize(&problem, &out, lambda, robust).map(|_| ()),
        Command::Verify { problem, certificate } => cmd_verify(&problem, &certificate).map(|_| ()),
        Command::Simulate {
            problem,
            certificate,
            x0,
            steps,
            out,
            format,
        } => cmd_simulate(&problem, &certificate, &x0, steps, out.as_deref(), format),
    }
}

fn synthesis_error(e: SynthesisError) -> CliError {
    match e {
        SynthesisError::InfeasibleProblem | SynthesisError::SolverFailure(_) => CliError::Infeasible(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

fn format_matrix(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = m
        .row_iter()
        .map(|r| r.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", "))
        .collect();
    format!("[{}]", rows.join("; "))
}

/// Writes a problem file from an experiment on the configured plant and
/// returns it.
pub fn cmd_generate(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<ProblemFile, CliError> {
    let (config, _): (GenerateConfig, _) = read_json(config_path)?;
    let seed = seed.unwrap_or(config.seed);
    let plant = PlantModel::new(config.model.a.to_matrix("A")?, config.model.b.to_matrix("B")?)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let (n, m, t) = (plant.n(), plant.m(), config.samples);
    if config.x0.len() != n {
        return Err(CliError::Validation(format!("x0 has {} entries, expected {n}", config.x0.len())));
    }
    let [lo, hi] = config.input_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(CliError::Validation(format!("invalid input range [{lo}, {hi}]")));
    }
    if t < min_samples(n, m) {
        eprintln!(
            "warning: {t} samples is below the minimum (m+1)n+m = {} for full row rank",
            min_samples(n, m)
        );
    }

    let mut rng = seeded_rng(seed);
    let inputs = uniform_inputs(&mut rng, m, t, lo, hi);
    let disturbance = match config.disturbance_radius {
        Some(r) => Some(DisturbanceSet::boxed(n, r).map_err(|e| CliError::Validation(e.to_string()))?),
        None => None,
    };
    let samples: Option<Vec<DVector<f64>>> = disturbance
        .as_ref()
        .map(|d| (0..t).map(|_| sample_disturbance(&mut rng, d)).collect());
    let (data, _) = run_experiment(&plant, &DVector::from_column_slice(&config.x0), &inputs, samples.as_deref())
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let order = excitation_order(&inputs);
    let rank = numerical_rank(&data.theta(), RANK_TOL);
    println!("samples: {t} (minimum {})", min_samples(n, m));
    println!("persistent excitation order: {order} (needed {})", n + 1);
    if rank == n + m {
        println!("theta rank: {rank} of {}, full row rank", n + m);
    } else {
        println!("theta rank: {rank} of {}, rank deficient", n + m);
    }

    let file = ProblemFile {
        state_set: config.state_set,
        input_set: config.input_set,
        lambda: config.lambda,
        data: Some(DataBlock {
            u0t: data.u0t().into(),
            x0t: data.x0t().into(),
            x1t: data.x1t().into(),
        }),
        model: None,
        disturbance: disturbance.map(|d| DisturbanceBlock {
            vertices: d.vertices().iter().map(|v| v.iter().copied().collect()).collect(),
        }),
        meta: Meta {
            seed: Some(seed),
            description: config.description,
        },
    };
    write_json(out, &file)?;
    Ok(file)
}

/// Closed-loop matrix implied by a certificate: `A + BK` for a model,
/// `X_{1,T} G_K` for data. Data certificates without `G_K` are embedded.
fn closed_loop(problem: &LoadedProblem, cert: &Certificate) -> Result<DMatrix<f64>, CliError> {
    match &problem.source {
        Source::Model(plant) => Ok(plant.closed_loop(&cert.gain)),
        Source::Data(data) => {
            let g = match &cert.g_matrix {
                Some(g) => g.clone(),
                None => embed_gain(data, &cert.gain)
                    .ok_or_else(|| CliError::Validation("data matrix Θ lacks full row rank".into()))?,
            };
            Ok(data.x1t() * g)
        }
    }
}

fn check_shapes(problem: &LoadedProblem, cert: &Certificate) -> Result<(), CliError> {
    let n = problem.state_set.dim();
    let m = problem.input_set.dim();
    let r = problem.state_set.num_rows();
    let mismatch = |what: &str, found: (usize, usize), expected: (usize, usize)| {
        CliError::Validation(format!(
            "{what} is {}x{}, expected {}x{}",
            found.0, found.1, expected.0, expected.1
        ))
    };
    if cert.gain.shape() != (m, n) {
        return Err(mismatch("gain", cert.gain.shape(), (m, n)));
    }
    if let Some(p) = &cert.p_matrix {
        if p.shape() != (r, r) {
            return Err(mismatch("P", p.shape(), (r, r)));
        }
    }
    if let Some(g) = &cert.g_matrix {
        let Some(data) = problem.data() else {
            return Err(CliError::Validation("certificate has G_K but the problem has no data".into()));
        };
        if g.shape() != (data.len(), n) {
            return Err(mismatch("G_K", g.shape(), (data.len(), n)));
        }
    }
    Ok(())
}

/// Runs every applicable check. A data certificate must also satisfy
/// `K = U_{0,T} G_K` and `X_{0,T} G_K = I`.
pub fn verify_loaded(problem: &LoadedProblem, cert: &Certificate) -> Result<VerificationReport, CliError> {
    check_shapes(problem, cert)?;
    let f = closed_loop(problem, cert)?;
    let robust = cert.p_matrix.is_none();
    let disturbance = if robust { problem.disturbance.as_ref() } else { None };
    let mut report = verify_certificate(
        cert,
        &f,
        &problem.state_set,
        &problem.input_set,
        disturbance,
        problem.data(),
        DEFAULT_TOL,
    );
    if let (Some(data), Some(g)) = (problem.data(), &cert.g_matrix) {
        let n = data.n();
        let consistent = max_abs(&(data.u0t() * g - &cert.gain)) <= DEFAULT_TOL
            && max_abs(&(data.x0t() * g - DMatrix::identity(n, n))) <= DEFAULT_TOL;
        report.certificate_ok &= consistent;
    }
    Ok(report)
}

fn report_text(report: &VerificationReport) -> String {
    let flag = |b: bool| if b { "pass" } else { "FAIL" };
    let mut s = String::new();
    let _ = writeln!(s, "contractivity: {} (worst vertex gauge {:.9})", flag(report.contractivity_ok), report.worst_vertex_gauge);
    let _ = writeln!(s, "certificate: {}", flag(report.certificate_ok));
    let _ = writeln!(
        s,
        "admissibility: {} (worst input violation {:.9})",
        flag(report.admissibility_ok),
        report.worst_input_violation
    );
    if let Some(r) = report.robust_ok {
        let _ = writeln!(s, "robust invariance: {}", flag(r));
    }
    if let Some(m) = report.lyapunov_decay_margin {
        let _ = writeln!(s, "decay margin: {m:.3e}");
    }
    s
}

/// Solves the problem, verifies the result and writes the certificate file.
/// The file is written even when verification fails.
pub fn cmd_synthesize(
    problem_path: &Path,
    out: &Path,
    lambda: Option<LambdaField>,
    robust: bool,
) -> Result<CertificateFile, CliError> {
    let (file, bytes): (ProblemFile, _) = read_json(problem_path)?;
    let problem = file.load()?;
    let level = lambda.unwrap_or(problem.lambda);
    if robust && problem.disturbance.is_none() {
        return Err(CliError::Validation("--robust needs a disturbance set in the problem file".into()));
    }
    if robust && problem.data().is_none() {
        return Err(CliError::Validation("--robust needs experiment data".into()));
    }
    let cert = if robust {
        // The robust program has no contractivity level.
        synthesize(&problem.to_synthesis(LambdaField::Fixed(0.0), true))
    } else {
        match level {
            LambdaField::Min => minimize_lambda(&problem.to_synthesis(level, false)),
            LambdaField::Fixed(_) => synthesize(&problem.to_synthesis(level, false)),
        }
    }
    .map_err(synthesis_error)?;

    let report = verify_loaded(&problem, &cert)?;
    let cert_file = CertificateFile::new(&cert, report.clone(), sha256_digest(&bytes));
    write_json(out, &cert_file)?;
    println!("lambda: {:.9}", cert.lambda);
    println!("K: {}", format_matrix(&cert.gain));
    print!("{}", report_text(&report));
    if report.passed() {
        Ok(cert_file)
    } else {
        Err(CliError::VerificationFailed("synthesized certificate failed verification".into()))
    }
}

pub fn cmd_verify(problem_path: &Path, certificate_path: &Path) -> Result<VerificationReport, CliError> {
    let (file, _): (ProblemFile, _) = read_json(problem_path)?;
    let problem = file.load()?;
    let (cert_file, _): (CertificateFile, _) = read_json(certificate_path)?;
    let cert = cert_file.certificate()?;
    let report = verify_loaded(&problem, &cert)?;
    print!("{}", report_text(&report));
    if report.passed() {
        Ok(report)
    } else {
        Err(CliError::VerificationFailed("verification failed".into()))
    }
}

/// States and the inputs applied at each of them.
pub type Trajectory = (Vec<DVector<f64>>, Vec<DVector<f64>>);

/// Closed-loop states and inputs `u = K x` for `steps` steps from `x0`.
pub fn simulate_closed_loop(
    problem: &LoadedProblem,
    cert: &Certificate,
    x0: &DVector<f64>,
    steps: usize,
) -> Result<Trajectory, CliError> {
    check_shapes(problem, cert)?;
    if x0.len() != problem.state_set.dim() {
        return Err(CliError::Validation(format!(
            "x0 has {} entries, expected {}",
            x0.len(),
            problem.state_set.dim()
        )));
    }
    if steps == 0 {
        return Err(CliError::Validation("steps must be at least 1".into()));
    }
    if !problem.state_set.contains(x0, 1.0, 1e-9) {
        return Err(CliError::OutsideSet(format!(
            "x0 is outside the state set (gauge {:.6})",
            problem.state_set.gauge(x0)
        )));
    }
    let f = closed_loop(problem, cert)?;
    let mut states = vec![x0.clone()];
    for t in 0..steps {
        let next = &f * &states[t];
        states.push(next);
    }
    let inputs = states.iter().map(|x| &cert.gain * x).collect();
    Ok((states, inputs))
}

/// CSV with columns `t, x1..xn, u1..um, V`.
pub fn trajectory_csv(problem: &LoadedProblem, states: &[DVector<f64>], inputs: &[DVector<f64>]) -> String {
    let n = problem.state_set.dim();
    let m = problem.input_set.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.push("V".into());
    let mut csv = header.join(",");
    csv.push('\n');
    for (t, (x, u)) in states.iter().zip(inputs).enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        row.extend(u.iter().map(|v| v.to_string()));
        row.push(lyapunov_value(&problem.state_set, x).to_string());
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    csv
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Path for the input plot next to the phase plot: `run.svg` → `run_input.svg`.
pub fn input_plot_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_input.svg"))
}

pub fn cmd_simulate(
    problem_path: &Path,
    certificate_path: &Path,
    x0: &[f64],
    steps: usize,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<(), CliError> {
    let (file, _): (ProblemFile, _) = read_json(problem_path)?;
    let problem = file.load()?;
    let (cert_file, _): (CertificateFile, _) = read_json(certificate_path)?;
    let cert = cert_file.certificate()?;
    let (states, inputs) = simulate_closed_loop(&problem, &cert, &DVector::from_column_slice(x0), steps)?;
    match format {
        OutputFormat::Csv => {
            let csv = trajectory_csv(&problem, &states, &inputs);
            match out {
                Some(path) => write_text(path, &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        OutputFormat::Svg => {
            let path = out.ok_or_else(|| CliError::Validation("--format svg needs --out".into()))?;
            let svg = plot::phase_portrait_svg(&problem.state_set, cert.lambda, &states)
                .ok_or_else(|| CliError::Validation("phase plots need a 2-state problem".into()))?;
            write_text(path, &svg)?;
            if let Some((lo, hi)) = problem.input_set.scalar_bounds() {
                let u: Vec<f64> = inputs.iter().map(|u| u[0]).collect();
                write_text(&input_plot_path(path), &plot::input_svg(&u, lo, hi))?;
            }
            Ok(())
        }
    }
}

/// Builds a model-based problem file, mainly for tests and scripting.
pub fn model_problem(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    state_set: &DMatrix<f64>,
    input_set: &DMatrix<f64>,
    lambda: LambdaField,
) -> ProblemFile {
    ProblemFile {
        state_set: MatrixRecord::from(state_set),
        input_set: MatrixRecord::from(input_set),
        lambda,
        data: None,
        model: Some(files::ModelBlock {
            a: a.into(),
            b: b.into(),
        }),
        disturbance: None,
        meta: Meta::default(),
    }
}
