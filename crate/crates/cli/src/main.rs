//! `mgspec`: spectra, bounds, surgery and length optimization for metric
//! graphs from the command line.
//!
//! Exit codes: 0 success, 1 unreadable or invalid input, 2 solvers disagree
//! (or an optimizer value exceeds the bound), 3 convergence failure,
//! 4 the graph violates the hypotheses of the bound, 64 usage error.

mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mgspec_core::isoperimetric::BoundError;
use mgspec_core::optimizer::OptimizerError;
use mgspec_core::surgery::SurgeryError;
use mgspec_core::{GraphError, SolverError};

use output::Format;

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_DISAGREEMENT: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;
pub const EXIT_HYPOTHESIS: u8 = 4;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "mgspec", version, about = "Spectra of the standard Laplacian on metric graphs")]
pub struct Cli {
    /// worker threads (default: available cores); MGSPEC_JOBS takes precedence
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// First eigenvalues with multiplicities
    Spectrum(SpectrumArgs),
    /// Compare mu_{k+1} A^2 of a tree with the sharp bound
    Bound(BoundArgs),
    /// Maximize mu_{k+1} A^2 over all series-reduced trees in an edge range
    Optimize(OptimizeArgs),
    /// Apply a surgery and compare spectra before and after
    #[command(subcommand)]
    Surgery(SurgeryCommand),
    /// Write a graph file
    #[command(subcommand)]
    Generate(GenerateCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Secular,
    Fem,
    Both,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    pub graph: PathBuf,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub count: u32,
    #[arg(long, value_enum, default_value_t = MethodArg::Secular)]
    pub method: MethodArg,
    /// root bracket width in kappa for the secular solver
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    pub graph: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: u32,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: u32,
    /// edge-count range `a..b` (inclusive), within 3..8
    #[arg(long, default_value = "3..5", value_parser = parse_range)]
    pub edges: (usize, usize),
    /// Nelder-Mead starts per topology
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    pub restarts: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// also write the result: CSV if the name ends in `.csv`, JSON otherwise
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SurgeryOutput {
    /// eigenvalues compared before and after
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    pub count: u32,
    /// write the resulting graph here
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
pub enum SurgeryCommand {
    /// Delete a pendant edge and its leaf
    RemovePendant {
        graph: PathBuf,
        #[arg(long)]
        edge: usize,
        #[command(flatten)]
        output: SurgeryOutput,
    },
    /// Shorten a pendant edge by `delta`
    ShortenPendant {
        graph: PathBuf,
        #[arg(long)]
        edge: usize,
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        output: SurgeryOutput,
    },
    /// Cut an edge loose from its higher-degree endpoint
    Detach {
        graph: PathBuf,
        #[arg(long)]
        edge: usize,
        #[command(flatten)]
        output: SurgeryOutput,
    },
    /// Shorten the arms of a 3-star to the shortest one
    Equilateral {
        graph: PathBuf,
        #[command(flatten)]
        output: SurgeryOutput,
    },
    /// Build the 3-star spanned by the longest edges of a tree
    Extract {
        graph: PathBuf,
        #[command(flatten)]
        output: SurgeryOutput,
    },
}

#[derive(Subcommand, Debug)]
pub enum GenerateCommand {
    /// The 3-star maximizing mu_{k+1} A^2
    ExtremalStar {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A star with equal arms
    EquilateralStar {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        edges: u32,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A star with the given arm lengths
    Star {
        #[arg(long, value_delimiter = ',', required = true)]
        lengths: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A single interval
    Path {
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A random tree with unit total length
    RandomTree {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        edges: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// reject trees with degree-two vertices
        #[arg(long)]
        series_reduced: bool,
        /// shortest edge as a fraction of the total length
        #[arg(long, default_value_t = 1e-3)]
        floor: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a..b, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if !(3 <= a && a <= b && b <= 8) {
        return Err(format!("edge range {a}..{b} must satisfy 3 <= a <= b <= 8"));
    }
    Ok((a, b))
}

/// A failed command: exit code and message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
    /// report printed to stdout before failing
    pub output: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
            output: String::new(),
        }
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        Failure::new(EXIT_INPUT, e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let code = match e {
            SolverError::CountMismatch { .. } => EXIT_DISAGREEMENT,
            SolverError::ConvergenceFailure(_) | SolverError::FactorizationBreakdown { .. } => EXIT_CONVERGENCE,
            _ => EXIT_INPUT,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<BoundError> for Failure {
    fn from(e: BoundError) -> Self {
        match e {
            BoundError::HypothesisViolated(_) | BoundError::NotATree => Failure::new(EXIT_HYPOTHESIS, e.to_string()),
            BoundError::Solver(s) => s.into(),
            BoundError::BadParameter(_) => Failure::new(EXIT_INPUT, e.to_string()),
        }
    }
}

impl From<OptimizerError> for Failure {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::RailViolation { .. } => Failure::new(EXIT_DISAGREEMENT, e.to_string()),
            OptimizerError::Solver(s) => s.into(),
            OptimizerError::Graph(g) => g.into(),
            OptimizerError::BadParameter(_) => Failure::new(EXIT_INPUT, e.to_string()),
        }
    }
}

impl From<SurgeryError> for Failure {
    fn from(e: SurgeryError) -> Self {
        Failure::new(EXIT_INPUT, e.to_string())
    }
}

fn configure_threads(jobs: Option<u32>) -> Result<(), Failure> {
    let env = match std::env::var("MGSPEC_JOBS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| Failure::new(EXIT_USAGE, format!("MGSPEC_JOBS={v:?} is not a positive integer")))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = env.or(jobs.map(|j| j as usize)) {
        // a pool built earlier in the same process is fine to keep
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run<I, T>(args: I) -> Result<String, Failure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Ok(e.to_string());
            }
            return Err(Failure::new(EXIT_USAGE, e.to_string().trim_end()));
        }
    };
    configure_threads(cli.jobs)?;
    match cli.command {
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::Bound(a) => commands::bound(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::Surgery(c) => commands::surgery(&c),
        Command::Generate(c) => commands::generate(&c),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            print!("{}", f.output);
            eprintln!("mgspec: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
