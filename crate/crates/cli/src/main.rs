use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracpoin::FracError;

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "fracpoin", version, about = "Whitney coverings and weighted fractional Poincaré inequalities")]
pub struct Cli {
    /// Seed for every random choice; recorded in the output header.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format for commands that support both.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Whitney decomposition and its verification report.
    Whitney(WhitneyArgs),
    /// Tree covering of a cube from its regular m^n partition.
    CoverCube(CoverCubeArgs),
    /// Tree covering of a domain by expanded Whitney cubes.
    CoverJohn(CoverJohnArgs),
    /// Zero-mean decompositions subordinate to a covering.
    Decompose(DecomposeArgs),
    /// Norm probe of the tree averaging operator.
    HardyProbe(HardyArgs),
    /// Evaluate the Poincaré inequality on a batch of fields.
    Verify(VerifyArgs),
    /// Closed-form constants.
    Constants(ConstantsArgs),
    /// Lower bound on the sharp constant.
    Estimate(EstimateArgs),
    /// Theoretical and empirical constants across tau.
    SweepTau(SweepArgs),
    /// Sharp-constant estimates on rooms joined by narrowing corridors.
    RoomsProbe(RoomsArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DomainArgs {
    /// Family name (square, l_shape, slit_square, rooms), inline JSON or a JSON file.
    #[arg(long, default_value = "square")]
    pub domain: String,
}

#[derive(Args, Debug, Clone)]
pub struct KernelArgs {
    /// main, tau_ball, classical or ponce.
    #[arg(long, default_value = "main")]
    pub kernel: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub s: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Boundary set F: corner, boundary, edge, side<axis><+|->, inline JSON or a JSON file.
    #[arg(long = "F", default_value = "corner")]
    pub f: String,
    /// Radial profile for the ponce kernel: power:s, log:s, plateau:s:c.
    #[arg(long, default_value = "power:0.5")]
    pub rho: String,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Refinement depth: 2^r grid cells per lattice cell side.
    #[arg(long, default_value_t = 5)]
    pub r: u32,
    /// Subdivisions per lattice cell side; overrides --r.
    #[arg(long)]
    pub sub: Option<u32>,
    /// Recursive subdivision depth of touching cell pairs.
    #[arg(long = "rd", default_value_t = 3)]
    pub rd: u32,
}

#[derive(Args, Debug)]
pub struct WhitneyArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Finest generation.
    #[arg(long, default_value_t = 8)]
    pub gen: i32,
}

#[derive(Args, Debug)]
pub struct CoverCubeArgs {
    /// Dimension (1 to 3).
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Partition size; chosen from tau when absent.
    #[arg(long)]
    pub m: Option<usize>,
    /// Cube side as a rational p/q.
    #[arg(long, default_value = "1")]
    pub side: String,
}

#[derive(Args, Debug)]
pub struct CoverJohnArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, default_value_t = 8)]
    pub gen: i32,
    /// Boundary sets for the weight comparability check.
    #[arg(long = "F", value_delimiter = ';', default_value = "corner")]
    pub f: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CoveringChoice {
    Cube,
    John,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, value_enum, default_value = "john")]
    pub covering: CoveringChoice,
    /// Whitney generation of the john covering.
    #[arg(long, default_value_t = 5)]
    pub gen: i32,
    /// Partition size of the cube covering.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 5)]
    pub r: u32,
    /// Field list separated by ';': random:COUNT, random:SEED:FREQ, x0, cheb:2,3, bump:cx,cy:r, json:PATH.
    #[arg(long, value_delimiter = ';', default_value = "random:10")]
    pub fields: Vec<String>,
    /// Include every part of every field in the output.
    #[arg(long)]
    pub parts: bool,
}

#[derive(Args, Debug)]
pub struct HardyArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, default_value_t = 5)]
    pub gen: i32,
    #[arg(long, default_value_t = 5)]
    pub r: u32,
    /// Exponents q, comma separated; "inf" for the sup norm.
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,4")]
    pub q: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long = "F", default_value = "corner")]
    pub f: String,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Whitney generation of the covering that gives K; the localized
    /// covering is capped at the finest generation the grid resolves.
    #[arg(long, default_value_t = 8)]
    pub gen: i32,
    /// Field list separated by ';' (see decompose).
    #[arg(long, value_delimiter = ';', default_value = "random:50")]
    pub fields: Vec<String>,
    /// Sum the right side over the covering sets instead of the whole domain.
    #[arg(long)]
    pub localized: bool,
    /// Constant to test against; defaults to the closed form for the kernel.
    #[arg(long)]
    pub constant: Option<f64>,
    /// Skip the coarser-grid comparison.
    #[arg(long)]
    pub no_refinement: bool,
}

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub s: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long = "K")]
    pub k: f64,
    /// Radial profile; switches to the radial kernel constants.
    #[arg(long)]
    pub rho: Option<String>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Whitney generation of the covering that gives K.
    #[arg(long, default_value_t = 8)]
    pub gen: i32,
    /// rayleigh or random:BUDGET.
    #[arg(long, default_value = "rayleigh")]
    pub method: String,
    /// Include the extremal field.
    #[arg(long)]
    pub certificate: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub s: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long = "F", default_value = "corner")]
    pub f: String,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8")]
    pub taus: Vec<f64>,
    /// Boman constant; computed from the john covering when absent.
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub gen: i32,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value = "rayleigh")]
    pub method: String,
}

#[derive(Args, Debug)]
pub struct RoomsArgs {
    /// Number of rooms.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Corridor width exponents j (width 2^-j).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub js: Vec<u32>,
    #[arg(long, default_value = "1/2")]
    pub corridor_length: String,
    /// Grid spacing as a dyadic rational.
    #[arg(long, default_value = "1/32")]
    pub h: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub s: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long = "rd", default_value_t = 3)]
    pub rd: u32,
    #[arg(long, default_value = "rayleigh")]
    pub method: String,
}

/// Input errors are usage errors; everything else is a failed run.
fn exit_code(e: &FracError) -> u8 {
    match e {
        FracError::Parse(_)
        | FracError::InvalidDomain(_)
        | FracError::InvalidBoundarySet(_)
        | FracError::PointOutsideDomain(_)
        | FracError::OutOfRange(_)
        | FracError::IncompatibleGrid(_)
        | FracError::Json(_)
        | FracError::Io(_) => 2,
        _ => 1,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("FRACPOIN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("FRACPOIN_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
