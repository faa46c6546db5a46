//! Command-line surface over the `kdclass` library: KD grids of density
//! operators, verification suites, divisor transfer graphs, and convex
//! decomposition certificates. Reports are JSON on stdout; diagnostics go
//! to stderr. Exit code 0 means every check passed, 1 a check or verdict
//! failed, 2 a usage or input error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use kdclass::decompose::{lp_membership, sweep_decompose, DecomposeOptions};
use kdclass::graph::path_state_union;
use kdclass::hilbert::{
    kd_distribution, matrix_from_json, DensityOperator, DftPair, DEFAULT_ENTRY_TOL,
};
use kdclass::numtheory::{gcd, DimensionProfile};
use kdclass::purestates::MARGINAL_TOL;
use kdclass::suites::{
    suite_marginals, suite_path_sweep, suite_prime_power_roundtrip, suite_rank_equality,
    suite_value_law, CheckResult,
};
use kdclass::{DivisorGraph, Error, GraphPath, LpVerdict};

#[derive(Parser)]
#[command(
    name = "kdclass",
    version,
    about = "Kirkwood-Dirac distributions over DFT base pairs: grids, verification suites, transfer graphs, decomposition certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and classify the KD grid of a density operator.
    Dist {
        /// JSON file holding the matrix: {"d": n, "re": [[..]], "im": [[..]]}.
        #[arg(long)]
        state: PathBuf,
        /// Hilbert space dimension the file must match.
        #[arg(long)]
        d: u64,
    },
    /// Run verification suites at a dimension.
    Verify {
        #[arg(long)]
        d: u64,
        /// One of: lemmaA, marginals, lemma4, theorem1, theorem2.
        /// Omit to run every suite applicable to the dimension.
        #[arg(long)]
        suite: Option<String>,
        /// Start vertex for the path-sweep suite; all admissible values
        /// when omitted.
        #[arg(long)]
        x0: Option<u64>,
        /// Mixture draws per sampled check.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// PRNG seed; reports are deterministic given the seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the divisor transfer graph for a start vertex.
    Graph {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        x0: u64,
        /// Include every start-to-end path in the report.
        #[arg(long)]
        paths: bool,
        /// Emit DOT text instead of JSON.
        #[arg(long)]
        dot: bool,
    },
    /// Decompose a state into a convex combination of path pure states.
    Decompose {
        /// JSON file holding the matrix: {"d": n, "re": [[..]], "im": [[..]]}.
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        x0: u64,
        /// Comma-separated vertex list overriding the canonical path.
        #[arg(long, value_delimiter = ',')]
        path: Option<Vec<u64>>,
        /// Also run the LP membership oracle and assert agreement.
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Serialize)]
struct Tolerances {
    entry_tol: f64,
    span_tol: f64,
    residual_tol: f64,
    lp_tol: f64,
    weight_tol: f64,
    rank_tol: f64,
    marginal_tol: f64,
}

impl Tolerances {
    fn from_options(opts: &DecomposeOptions) -> Self {
        Tolerances {
            entry_tol: opts.entry_tol,
            span_tol: opts.span_tol,
            residual_tol: opts.residual_tol,
            lp_tol: opts.lp_tol,
            weight_tol: opts.weight_tol,
            rank_tol: opts.rank_tol,
            marginal_tol: MARGINAL_TOL,
        }
    }
}

#[derive(Serialize)]
struct GridEntryReport {
    row: usize,
    col: usize,
    value: f64,
}

#[derive(Serialize)]
struct DistReport {
    command: String,
    d: u64,
    entry_tol: f64,
    grid_re: Vec<Vec<f64>>,
    grid_im: Vec<Vec<f64>>,
    is_real: bool,
    is_classical: bool,
    normalization_residual: f64,
    min_real_entry: GridEntryReport,
    worst_imag_entry: GridEntryReport,
    wall_time_ms: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    command: String,
    d: u64,
    samples: usize,
    seed: u64,
    tolerances: Tolerances,
    checks: Vec<CheckResult>,
    pass: bool,
    wall_time_ms: f64,
}

#[derive(Serialize)]
struct GraphReport {
    command: String,
    d: u64,
    x0: u64,
    y0: u64,
    vertices: Vec<u64>,
    edges: Vec<kdclass::graph::GraphEdge>,
    path_count: u128,
    paths: Option<Vec<GraphPath>>,
    wall_time_ms: f64,
}

#[derive(Serialize)]
struct DecomposeReport {
    command: String,
    d: u64,
    x0: u64,
    tolerances: Tolerances,
    certificate: kdclass::DecompositionCertificate,
    oracle: Option<LpVerdict>,
    oracle_agrees: Option<bool>,
    pass: bool,
    wall_time_ms: f64,
}

#[derive(Serialize)]
struct RejectionReport {
    command: String,
    d: u64,
    x0: u64,
    tolerances: Tolerances,
    error_kind: String,
    detail: String,
    oracle: Option<LpVerdict>,
    oracle_agrees: Option<bool>,
    pass: bool,
    wall_time_ms: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command_echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let entry_tol = match entry_tol_from_env() {
        Ok(tol) => tol,
        Err(message) => return usage_error(&message),
    };
    let opts = DecomposeOptions {
        entry_tol,
        ..DecomposeOptions::default()
    };
    let code = match cli.command {
        Command::Dist { state, d } => cmd_dist(&command_echo, &state, d, entry_tol),
        Command::Verify {
            d,
            suite,
            x0,
            samples,
            seed,
        } => cmd_verify(&command_echo, d, suite.as_deref(), x0, samples, seed, &opts),
        Command::Graph { d, x0, paths, dot } => cmd_graph(&command_echo, d, x0, paths, dot),
        Command::Decompose {
            state,
            d,
            x0,
            path,
            oracle,
        } => cmd_decompose(&command_echo, &state, d, x0, path, oracle, &opts),
    };
    code
}

fn entry_tol_from_env() -> Result<f64, String> {
    match std::env::var("KD_TOL") {
        Ok(raw) => match raw.parse::<f64>() {
            Ok(tol) if tol.is_finite() && tol > 0.0 => Ok(tol),
            _ => Err(format!(
                "KD_TOL must be a positive finite number, got {raw:?}"
            )),
        },
        Err(_) => Ok(DEFAULT_ENTRY_TOL),
    }
}

fn usage_error(message: &str) -> ExitCode {
    eprintln!("kdclass: {message}");
    ExitCode::from(2)
}

fn emit<T: Serialize>(report: &T) {
    match serde_json::to_string_pretty(report) {
        Ok(text) => println!("{text}"),
        Err(error) => eprintln!("kdclass: report serialization failed: {error}"),
    }
}

/// Names the operator invariant a validation error violated, for
/// diagnostics that point at the offending property.
fn invariant_name(error: &Error) -> &'static str {
    match error {
        Error::NotHermitian { .. } => "hermiticity",
        Error::TraceNotOne { .. } => "unit trace",
        Error::NotPositive { .. } => "positivity",
        Error::NonSquareMatrix { .. } | Error::RaggedMatrix { .. } => "shape",
        Error::NonFiniteEntry { .. } => "finiteness",
        Error::DimensionMismatch { .. } => "dimension",
        _ => "validity",
    }
}

fn load_density(path: &PathBuf, d: u64, tol: f64) -> Result<DensityOperator, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let matrix = matrix_from_json(&text)
        .map_err(|e| format!("{}: {}: {e}", path.display(), invariant_name(&e)))?;
    if matrix.nrows() as u64 != d {
        return Err(format!(
            "{}: dimension: file holds a {}x{} matrix, --d is {d}",
            path.display(),
            matrix.nrows(),
            matrix.ncols()
        ));
    }
    DensityOperator::new(matrix, tol)
        .map_err(|e| format!("{}: {}: {e}", path.display(), invariant_name(&e)))
}

fn cmd_dist(command: &str, state: &PathBuf, d: u64, entry_tol: f64) -> ExitCode {
    let start = Instant::now();
    let rho = match load_density(state, d, entry_tol) {
        Ok(rho) => rho,
        Err(message) => return usage_error(&message),
    };
    let pair = match DftPair::new(d) {
        Ok(pair) => pair,
        Err(error) => return usage_error(&error.to_string()),
    };
    let dist = match kd_distribution(rho.as_hermitian(), &pair, entry_tol) {
        Ok(dist) => dist,
        Err(error) => return usage_error(&error.to_string()),
    };
    let n = d as usize;
    let (imag_row, imag_col, imag_mag) = dist.worst_imag();
    let (real_row, real_col, real_min) = dist.min_real();
    let report = DistReport {
        command: command.to_string(),
        d,
        entry_tol,
        grid_re: (0..n)
            .map(|i| (0..n).map(|j| dist.grid()[(i, j)].re).collect())
            .collect(),
        grid_im: (0..n)
            .map(|i| (0..n).map(|j| dist.grid()[(i, j)].im).collect())
            .collect(),
        is_real: dist.is_real(),
        is_classical: dist.is_classical(),
        normalization_residual: dist.normalization_residual(),
        min_real_entry: GridEntryReport {
            row: real_row,
            col: real_col,
            value: real_min,
        },
        worst_imag_entry: GridEntryReport {
            row: imag_row,
            col: imag_col,
            value: imag_mag,
        },
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    emit(&report);
    ExitCode::SUCCESS
}

const SUITE_NAMES: [&str; 5] = ["lemmaA", "marginals", "lemma4", "theorem1", "theorem2"];

fn admissible_starts(profile: &DimensionProfile) -> Vec<u64> {
    profile
        .divisors()
        .iter()
        .copied()
        .filter(|&x0| gcd(x0, profile.d() / x0) == 1)
        .collect()
}

fn cmd_verify(
    command: &str,
    d: u64,
    suite: Option<&str>,
    x0: Option<u64>,
    samples: usize,
    seed: u64,
    opts: &DecomposeOptions,
) -> ExitCode {
    let start = Instant::now();
    let profile = match DimensionProfile::factorize(d) {
        Ok(profile) => profile,
        Err(error) => return usage_error(&error.to_string()),
    };
    let pair = match DftPair::new(d) {
        Ok(pair) => pair,
        Err(error) => return usage_error(&error.to_string()),
    };
    if let Some(name) = suite {
        if !SUITE_NAMES.contains(&name) {
            return usage_error(&format!(
                "unknown suite {name:?}; expected one of {SUITE_NAMES:?}"
            ));
        }
        if name == "theorem1" && !profile.is_prime_power() {
            return usage_error(&format!(
                "suite theorem1 needs a prime-power dimension, {d} is not one"
            ));
        }
    }
    if let Some(x0) = x0 {
        if !profile.is_divisor(x0) {
            return usage_error(&format!("{x0} does not divide {d}"));
        }
        if gcd(x0, d / x0) != 1 {
            return usage_error(&format!(
                "start vertex {x0} violates the coprimality requirement: gcd({x0}, {}) = {}",
                d / x0,
                gcd(x0, d / x0)
            ));
        }
    }

    let wanted = |name: &str| suite.map(|s| s == name).unwrap_or(true);
    let mut checks: Vec<CheckResult> = Vec::new();
    let run = || -> Result<Vec<CheckResult>, Error> {
        let mut out = Vec::new();
        if wanted("lemmaA") {
            out.push(suite_value_law(&profile, &pair, opts.entry_tol)?);
        }
        if wanted("marginals") {
            out.push(suite_marginals(&profile, &pair, MARGINAL_TOL)?);
        }
        if wanted("lemma4") {
            out.push(suite_rank_equality(&profile, &pair, opts.rank_tol)?);
        }
        if wanted("theorem1") && profile.is_prime_power() {
            out.push(suite_prime_power_roundtrip(
                &profile, &pair, samples, seed, opts,
            )?);
        }
        if wanted("theorem2") {
            let starts = match x0 {
                Some(x0) => vec![x0],
                None => admissible_starts(&profile),
            };
            for start_vertex in starts {
                let mut result =
                    suite_path_sweep(&profile, &pair, start_vertex, samples, seed, opts)?;
                result.name = format!("{} (x0 {start_vertex})", result.name);
                out.push(result);
            }
        }
        Ok(out)
    };
    match run() {
        Ok(results) => checks.extend(results),
        Err(error) => return usage_error(&error.to_string()),
    }
    let pass = checks.iter().all(|check| check.pass);
    let report = VerifyReport {
        command: command.to_string(),
        d,
        samples,
        seed,
        tolerances: Tolerances::from_options(opts),
        checks,
        pass,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    emit(&report);
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_graph(command: &str, d: u64, x0: u64, paths: bool, dot: bool) -> ExitCode {
    let start = Instant::now();
    let profile = match DimensionProfile::factorize(d) {
        Ok(profile) => profile,
        Err(error) => return usage_error(&error.to_string()),
    };
    let graph = match DivisorGraph::build(&profile, x0) {
        Ok(graph) => graph,
        Err(Error::CoprimalityViolation { x0, y0 }) => {
            return usage_error(&format!(
                "start vertex {x0} violates the coprimality requirement: gcd({x0}, {y0}) = {}",
                gcd(x0, y0)
            ));
        }
        Err(error) => return usage_error(&error.to_string()),
    };
    if dot {
        print!("{}", graph.to_dot());
        return ExitCode::SUCCESS;
    }
    let enumerated = if paths {
        match graph.enumerate_paths() {
            Ok(list) => Some(list),
            Err(error) => return usage_error(&error.to_string()),
        }
    } else {
        None
    };
    let report = GraphReport {
        command: command.to_string(),
        d,
        x0,
        y0: graph.y0(),
        vertices: graph.vertices().to_vec(),
        edges: graph.edges().to_vec(),
        path_count: graph.expected_path_count(&profile),
        paths: enumerated,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    emit(&report);
    ExitCode::SUCCESS
}

fn cmd_decompose(
    command: &str,
    state: &PathBuf,
    d: u64,
    x0: u64,
    path_override: Option<Vec<u64>>,
    oracle: bool,
    opts: &DecomposeOptions,
) -> ExitCode {
    let start = Instant::now();
    let rho = match load_density(state, d, opts.entry_tol) {
        Ok(rho) => rho,
        Err(message) => return usage_error(&message),
    };
    let profile = match DimensionProfile::factorize(d) {
        Ok(profile) => profile,
        Err(error) => return usage_error(&error.to_string()),
    };
    let pair = match DftPair::new(d) {
        Ok(pair) => pair,
        Err(error) => return usage_error(&error.to_string()),
    };
    let graph = match DivisorGraph::build(&profile, x0) {
        Ok(graph) => graph,
        Err(Error::CoprimalityViolation { x0, y0 }) => {
            return usage_error(&format!(
                "start vertex {x0} violates the coprimality requirement: gcd({x0}, {y0}) = {}",
                gcd(x0, y0)
            ));
        }
        Err(error) => return usage_error(&error.to_string()),
    };
    let path = match path_override {
        Some(vertices) => {
            let candidate = GraphPath { x0, vertices };
            if let Err(error) = graph.validate_path(&candidate) {
                return usage_error(&error.to_string());
            }
            candidate
        }
        None => graph.canonical_path(&profile),
    };
    let union = match path_state_union(&profile, &pair, &path) {
        Ok(union) => union,
        Err(error) => return usage_error(&error.to_string()),
    };
    let oracle_verdict = if oracle {
        match lp_membership(rho.matrix(), &union, opts) {
            Ok(verdict) => Some(verdict),
            Err(error) => return usage_error(&error.to_string()),
        }
    } else {
        None
    };

    match sweep_decompose(&profile, &pair, &graph, &path, rho.as_hermitian(), opts) {
        Ok(certificate) => {
            let oracle_agrees = oracle_verdict.as_ref().map(LpVerdict::is_feasible);
            let pass = oracle_agrees.unwrap_or(true);
            let report = DecomposeReport {
                command: command.to_string(),
                d,
                x0,
                tolerances: Tolerances::from_options(opts),
                certificate,
                oracle: oracle_verdict,
                oracle_agrees,
                pass,
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            emit(&report);
            if pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("kdclass: sweep produced a certificate but the LP oracle disagrees");
                ExitCode::from(1)
            }
        }
        Err(error @ (Error::NotKdClassical { .. } | Error::NotInSpan { .. })) => {
            let error_kind = match error {
                Error::NotKdClassical { .. } => "not_kd_classical",
                _ => "not_in_span",
            };
            let oracle_agrees = oracle_verdict.as_ref().map(LpVerdict::is_infeasible);
            let report = RejectionReport {
                command: command.to_string(),
                d,
                x0,
                tolerances: Tolerances::from_options(opts),
                error_kind: error_kind.to_string(),
                detail: error.to_string(),
                oracle: oracle_verdict,
                oracle_agrees,
                pass: false,
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            emit(&report);
            ExitCode::from(1)
        }
        Err(error) => usage_error(&error.to_string()),
    }
}
