//! `dhkit` command line. Each invocation runs one job described by a single
//! JSON document and writes a JSON report (or CSV table).
//!
//! Exit status: 0 on success, 1 when a mathematical precondition fails,
//! 2 for malformed input or unreadable files.

mod check;
mod commands;
mod job;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::job::{DegreeRange, Job};

#[derive(Parser, Debug)]
#[command(name = "dhkit", version, about = "Duistermaat-Heckman measures, non-Archimedean functionals and convex solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON job document (`-` reads stdin).
    #[arg(long, global = true, value_name = "PATH")]
    input: Option<PathBuf>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Exponent `a` for `Q^(a)` or a probe point; repeat for several.
    #[arg(long = "a", global = true, value_name = "A", allow_hyphen_values = true)]
    a: Vec<f64>,

    /// Inclusive degree range `m1..m2`, intersected with the stored degrees.
    #[arg(long, global = true, value_name = "M1..M2")]
    degrees: Option<DegreeRange>,

    /// Solver or comparison tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Worker threads for integration. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Successive minima, Q_m, Ψ_m and empirical measures; convergence table against `limit`.
    Dh,
    /// Non-Archimedean functionals of one measure or a candidate family.
    Report,
    /// Soliton vector of a polytope.
    Soliton,
    /// Optimal rescaling `a*` of a valuation measure.
    Rescale,
    /// Optimal torus twist of a weighted filtration.
    TwistOpt,
    /// Initial-term degeneration against a monomial weight filtration.
    Degenerate,
    /// `d_p` distances between two filtrations.
    Distance,
    /// Convexity scan of the cone family.
    Cone,
    /// Invariant suites on a filtration, with optional limit checks.
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dh => "dh",
            Command::Report => "report",
            Command::Soliton => "soliton",
            Command::Rescale => "rescale",
            Command::TwistOpt => "twist-opt",
            Command::Degenerate => "degenerate",
            Command::Distance => "distance",
            Command::Cone => "cone",
            Command::Check => "check",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Why a job stopped. Input failures exit with 2, domain failures with 1.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Domain(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Domain(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Domain(m) => write!(f, "{m}"),
        }
    }
}

impl From<dhkit::Error> for Failure {
    fn from(e: dhkit::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Domain(e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Failure::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Input(format!("cannot start {k} threads: {e}")))?;
    }
    let input = cli
        .input
        .ok_or_else(|| Failure::Input("--input is required (a JSON job document, or - for stdin)".into()))?;
    let job = Job::load(&input, cli.command, cli.a, cli.degrees, cli.tol)?;
    let report = commands::run(cli.command, &job)?;
    output::emit(&report, cli.format, cli.output.as_deref())?;
    match report.failed {
        Some(why) => Err(Failure::Domain(why)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
