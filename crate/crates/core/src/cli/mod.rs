//! Command-line driver.
//!
//! Every run resolves a flat JSON configuration (file plus flag overrides),
//! writes it as `config.resolved.json` next to its outputs, and tags every
//! output with the SHA-256 of that file.
//!
//! Exit codes: 0 success, 1 I/O or other runtime failure, 2 usage error,
//! 3 non-convergence, 4 invariant violation. A command that runs to the end
//! writes its report even when its status is 3 or 4.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::Error;
use commands::{run_command, Status};
use config::{load_config_map, merge, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "sector-spectra", version, about = "Spectra of Robin Laplacians on sectors and δ-interactions on star graphs")]
struct Cli {
    /// Flat JSON configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: results/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Subset of csv,json,svg,pgm.
    #[arg(long, global = true, value_delimiter = ',')]
    formats: Option<Vec<String>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Robin Laplacian on an interval: m(γL), E₁, E₂, dE₁/dγ, φ(γ).
    Interval(IntervalArgs),
    /// One sector solved to convergence, with count, enclosures and decay rate.
    Sector(SectorArgs),
    /// Eigenvalue curves over a list of angles.
    Scan(ScanArgs),
    /// Small-angle expansion coefficients of α²E_n.
    Fit(FitArgs),
    /// Number of eigenvalues below the threshold over a list of angles.
    Count(ScanArgs),
    /// δ-interaction on a star graph against the sector counting bound.
    Stargraph(StarArgs),
    /// Quasimode certificates on one fixed mesh, checked against a dense solve.
    Certify(SectorArgs),
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Args, Serialize)]
struct GridArgs {
    /// Inner radius; only 0 is accepted, the vertex is always resolved.
    #[arg(long)]
    r_min: Option<f64>,
    /// Truncation radius.
    #[arg(long)]
    r_max: Option<f64>,
    /// Radial elements on the coarsest level.
    #[arg(long)]
    n_r: Option<usize>,
    /// Growth factor of consecutive radial elements.
    #[arg(long)]
    grading: Option<f64>,
    /// Angular elements on the coarsest level.
    #[arg(long)]
    n_theta: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct SolverArgs {
    /// Relative residual at which an eigenpair counts as converged.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    /// band-cholesky, incomplete-cholesky, diagonal or none.
    #[arg(long)]
    preconditioner: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
struct RefineArgs {
    #[arg(long)]
    min_levels: Option<usize>,
    #[arg(long)]
    max_levels: Option<usize>,
    /// Relative change allowed between successive extrapolated values.
    #[arg(long)]
    refine_tolerance: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct IntervalArgs {
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// List or range of couplings, e.g. `0.1:10:geometric:60`.
    #[arg(long)]
    gammas: Option<String>,
    /// Half-length of the interval.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    half_length: Option<f64>,
    /// List or range of half-lengths, e.g. `3:8`.
    #[arg(long = "scan-L")]
    #[serde(rename = "scan_L")]
    scan_l: Option<String>,
}

#[derive(Debug, Args, Serialize)]
struct SectorArgs {
    /// Half-opening angle, in (0, π/2).
    #[arg(long)]
    alpha: Option<f64>,
    /// Robin coefficient (default 1).
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of eigenpairs.
    #[arg(long)]
    k: Option<usize>,
    /// even, odd or full.
    #[arg(long)]
    parity: Option<String>,
    /// Radial fit window for the decay rate, as fractions of the ground
    /// state's truncation radius.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    decay_window: Option<Vec<f64>>,
    /// Also write K and M as sparse triplets.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    dump_pencil: bool,
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    refine: RefineArgs,
    #[command(flatten)]
    #[serde(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args, Serialize)]
struct ScanArgs {
    /// List or range of angles, e.g. `0.05:1.4:geometric:12`.
    #[arg(long)]
    alphas: Option<String>,
    /// Robin coefficient (default 1).
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of eigenpairs.
    #[arg(long)]
    k: Option<usize>,
    /// Logarithmic α axis in plots.
    #[arg(long)]
    log_alpha: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    refine: RefineArgs,
    #[command(flatten)]
    #[serde(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Highest power of α² in the fit.
    #[arg(long)]
    order: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    scan: ScanArgs,
}

#[derive(Debug, Args, Serialize)]
struct StarArgs {
    /// Ray angles in radians, comma separated and increasing.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    angles: Option<Vec<f64>>,
    /// Strength of the δ-interaction (default 1).
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of eigenpairs.
    #[arg(long)]
    k: Option<usize>,
    /// Width of the first radial element, in units of 1/γ.
    #[arg(long)]
    first_width: Option<f64>,
    /// Growth of angular elements away from each ray.
    #[arg(long)]
    ray_grading: Option<f64>,
    /// Also write K and M as sparse triplets.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    dump_pencil: bool,
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    solver: SolverArgs,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Interval(_) => "interval",
            Command::Sector(_) => "sector",
            Command::Scan(_) => "scan",
            Command::Fit(_) => "fit",
            Command::Count(_) => "count",
            Command::Stargraph(_) => "stargraph",
            Command::Certify(_) => "certify",
        }
    }

    fn flags(&self) -> serde_json::Result<Value> {
        match self {
            Command::Interval(a) => serde_json::to_value(a),
            Command::Sector(a) | Command::Certify(a) => serde_json::to_value(a),
            Command::Scan(a) | Command::Count(a) => serde_json::to_value(a),
            Command::Fit(a) => serde_json::to_value(a),
            Command::Stargraph(a) => serde_json::to_value(a),
        }
    }
}

fn resolve(cli: &Cli) -> crate::Result<RunConfig> {
    let base = match &cli.config {
        Some(p) => load_config_map(p)?,
        None => Map::new(),
    };
    let name = cli.command.name();
    if let Some(c) = base.get("command").and_then(Value::as_str) {
        if c != name {
            return Err(Error::config(format!("config file is for '{c}', not '{name}'")));
        }
    }
    let mut flags = match cli.command.flags()? {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    flags.insert("command".into(), Value::String(name.into()));
    if let Some(f) = &cli.formats {
        flags.insert("formats".into(), serde_json::to_value(f)?);
    }
    merge(base, flags)?.resolve()
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("results").join(cfg.command()));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_FAILURE;
        }
    };
    let (report, status) = match pool.install(|| run_command(&cfg)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return error_code(&e);
        }
    };
    match report.write(&out, &cfg) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: writing outputs to {}: {e}", out.display());
            return EXIT_FAILURE;
        }
    }
    for (k, v) in &report.summary {
        println!("{k}: {v}");
    }
    match &status {
        Status::Ok => {}
        Status::NotConverged(msg) => eprintln!("not converged: {msg}"),
        Status::Violation(msg) => eprintln!("invariant violated: {msg}"),
    }
    status_code(&status)
}

/// Exit code for a command that ran to completion.
pub fn status_code(status: &Status) -> i32 {
    match status {
        Status::Ok => EXIT_OK,
        Status::NotConverged(_) => EXIT_NOT_CONVERGED,
        Status::Violation(_) => EXIT_INVARIANT,
    }
}

/// Exit code for a command that failed with `e`.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) => EXIT_USAGE,
        Error::NonConvergence { .. } => EXIT_NOT_CONVERGED,
        // a failed Cholesky of K + cM contradicts the analytic lower bound
        Error::InvariantViolation(_) | Error::NotPositiveDefinite { .. } => EXIT_INVARIANT,
        _ => EXIT_FAILURE,
    }
}
