//! `sgt`: boundary measures, zeta data and zeta-based graph comparison.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sgt_core::Error;

#[derive(Debug, Parser)]
#[command(
    name = "sgt",
    version,
    about = "Patterson-Sullivan measures and zeta fingerprints of finite graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check connectivity, valency >= 3 and genus >= 2.
    Validate {
        graph: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Genus, critical exponent, sphere sizes and the Dirac spectrum.
    Invariants {
        graph: PathBuf,
        /// Largest sphere radius and filtration level reported.
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Origin vertex for sphere sizes (defaults to the first vertex).
        #[arg(long)]
        origin: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Tree-side and free-group-side cylinder measures.
    Measure {
        graph: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Tree method, boundary method, or one of each.
        #[arg(long, value_enum, num_args = 1)]
        method: Vec<Method>,
        /// Origin of the tree measure (defaults to the first vertex).
        #[arg(long)]
        origin: Option<String>,
        /// Index into the presentation enumeration used for the free-group side.
        #[arg(long, default_value_t = 0)]
        choice: usize,
        /// BFS trees per origin considered when resolving `--choice`.
        #[arg(long, default_value_t = 1)]
        budget: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Truncated zeta series of a symbol over a grid of real s.
    Zeta {
        graph: PathBuf,
        /// `1`, `cyl:1,-2`, `0.5*cyl:1+2*cyl:-2`, ...
        #[arg(long, default_value = "1")]
        symbol: String,
        /// Series truncation N.
        #[arg(long, default_value_t = 25)]
        depth: usize,
        #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
        s_start: f64,
        #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
        s_stop: f64,
        #[arg(long, default_value_t = 0.1)]
        s_step: f64,
        /// Boundary method for the measure behind non-unit symbols.
        #[arg(long, value_enum, default_value = "geodesic-classify")]
        method: Method,
        #[arg(long, default_value_t = 0)]
        choice: usize,
        #[arg(long, default_value_t = 1)]
        budget: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Decide whether two graphs share a zeta fingerprint.
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// BFS trees per origin; 0 compares canonical presentations only.
        #[arg(long, default_value_t = 16)]
        budget: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Rebuild a ball of the first covering tree inside the second from the
    /// boundary map between their presentations.
    Reconstruct {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 3)]
        radius: usize,
        /// Presentation indices for the two graphs.
        #[arg(long, num_args = 1..=2, default_values_t = [0, 0])]
        choice: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        budget: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Poincare,
    Perron,
    RestrictedPoincare,
    GeodesicClassify,
}

/// Everything that determines an output file, embedded in it verbatim.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub inputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<SGrid>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub choice: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Hypothesis = 1,
    Input = 2,
    Disjoint = 3,
    NonConvergence = 4,
}

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn status(&self) -> Status {
        match self {
            Failure::Input(_) => Status::Input,
            Failure::Core(e) => match e {
                Error::Hypothesis(_) | Error::Disconnected { .. } => Status::Hypothesis,
                Error::Divergent { .. }
                | Error::NonConvergence { .. }
                | Error::NotExtrapolable { .. }
                | Error::Unstable { .. }
                | Error::DegenerateMeasure { .. }
                | Error::Pole { .. }
                | Error::AmbiguousGenus { .. } => Status::NonConvergence,
                _ => Status::Input,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Input(msg) => f.write_str(msg),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("SGT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Input(format!(
            "SGT_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| commands::run(cli.command));
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.status() as u8)
        }
    }
}
