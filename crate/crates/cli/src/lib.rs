//! Command-line front end: argument parsing, artifact writing and exit codes.

pub mod commands;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use shiftcover_core::{Error, ErrorClass};
use thiserror::Error as ThisError;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_APPLICABLE: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Validation => EXIT_VALIDATION,
                ErrorClass::NotApplicable => EXIT_NOT_APPLICABLE,
                ErrorClass::Infeasible => EXIT_INFEASIBLE,
                ErrorClass::Verification => EXIT_VERIFICATION,
            },
            CliError::Usage(_) | CliError::Json(_) | CliError::Io(_) => EXIT_VALIDATION,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.tag(),
            CliError::Usage(_) => "usage",
            CliError::Json(_) => "malformed_json",
            CliError::Io(_) => "io",
        }
    }

    /// Machine-readable error document for stderr.
    pub fn to_json(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct ErrorBody<'a> {
            tag: &'a str,
            message: String,
            exit_code: i32,
        }
        output::artifact_json(
            "error",
            &ErrorBody {
                tag: self.tag(),
                message: self.to_string(),
                exit_code: self.exit_code(),
            },
        )
        .expect("error document serializes")
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "shiftcover", version, about = "Coverings, approximation certificates and equidistribution checks for powers of scaled backward shifts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct SeqArgs {
    /// Sequence as inline JSON or @path, e.g. {"kind":"linear","params":{"c":1,"d":0},"horizon":1000}
    #[arg(long)]
    pub seq: String,
    /// Directory for artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multiplicative covering of an interval, checked on a grid.
    Cover {
        #[command(flatten)]
        common: SeqArgs,
        /// lo,hi
        #[arg(long)]
        interval: String,
        #[arg(long)]
        epsilon: f64,
        /// First sequence index used by the covering.
        #[arg(long, default_value_t = 1)]
        start: u64,
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
    },
    /// Block-vector approximation certificate for one target.
    Construct {
        #[command(flatten)]
        common: SeqArgs,
        #[arg(long)]
        interval: String,
        /// 1/s, as a decimal or a fraction like 1/10.
        #[arg(long)]
        accuracy: String,
        /// Target vector as [[index, re, im], ...] JSON or @path.
        #[arg(long)]
        target: String,
        /// Center vector, same format; zero by default.
        #[arg(long)]
        center: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        #[arg(long, default_value_t = shiftcover_core::approx::DEFAULT_GRID)]
        grid: usize,
    },
    /// Greedy vector satisfying a list of conditions simultaneously.
    Common {
        #[command(flatten)]
        common: SeqArgs,
        /// JSON list of {"target", "interval", "accuracy", "cutoff"?} or @path.
        #[arg(long)]
        conditions: String,
        #[arg(long)]
        initial: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        #[arg(long, default_value_t = shiftcover_core::approx::DEFAULT_GRID)]
        grid: usize,
    },
    /// Measure-based nonexistence certificate for convergent sum 1/k_n.
    Nonexist {
        #[command(flatten)]
        common: SeqArgs,
        #[arg(long)]
        interval: String,
        /// Override the dyadic choice of epsilon_0.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Random vectors whose coverage is checked against the bound.
        #[arg(long, default_value_t = 0)]
        vectors: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Star discrepancy and circle density of k_n theta mod 1.
    Weyl {
        #[command(flatten)]
        common: SeqArgs,
        #[arg(long, conflicts_with = "random_theta")]
        theta: Option<f64>,
        /// Draw theta uniformly from [0, 1) (needs --seed).
        #[arg(long)]
        random_theta: bool,
        #[arg(long)]
        count: u64,
        /// Number of equally spaced phase targets.
        #[arg(long, default_value_t = 8)]
        phases: usize,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Joint density of orbit points and phases.
    Joint {
        #[command(flatten)]
        common: SeqArgs,
        /// Vector as JSON or @path; or a common-vector artifact via --from-common.
        #[arg(long, required_unless_present = "from_common")]
        vector: Option<String>,
        /// Use the vector (and, without --targets, the condition targets) of a `common` artifact.
        #[arg(long)]
        from_common: Option<PathBuf>,
        /// JSON list of target vectors or @path.
        #[arg(long)]
        targets: Option<String>,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 8)]
        phases: usize,
        #[arg(long)]
        s: u64,
        /// Largest sequence index searched; the horizon by default.
        #[arg(long)]
        count: Option<u64>,
    },
    /// Re-parse an artifact and recompute its pass/fail status.
    Verify {
        #[arg(long)]
        artifact: PathBuf,
    },
}

/// Result of a successful run: the exit code and the artifacts written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    /// `(file name, bytes)`; the summary printed on stdout is `artifacts[0]`.
    pub artifacts: Vec<(String, Vec<u8>)>,
}

/// Parses `args` (program name first) and runs the command, writing
/// artifacts when `--out` is given.
pub fn run_args<I, T>(args: I) -> CliResult<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Usage(e.to_string()))?;
    let raw: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    commands::run(cli, &raw)
}
