//! `kljn` — batch experiment runner for the ideal KLJN simulator.
//!
//! Subcommands: `simulate`, `figure`, `attack`, `keyexchange`, `cf-check`.
//! Every command is deterministic given its full flag set including `--seed`,
//! and every output file is accompanied by (or embeds) a manifest with the
//! parameters, seed, and version needed to regenerate it.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime/I-O error.

mod cfg;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<kljn_core::Error> for CliError {
    fn from(e: kljn_core::Error) -> Self {
        match e {
            kljn_core::Error::PeriodCapExceeded { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "kljn", version, about = "Ideal KLJN key-exchange simulator and attack bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one bit period and write the wire trace as CSV.
    Simulate(SimulateArgs),
    /// Regenerate the scatter datasets behind the reference figures.
    Figure(FigureArgs),
    /// Run a Monte Carlo attack bench and report the advantage.
    Attack(AttackArgs),
    /// Run a full key-exchange session.
    Keyexchange(KeyexchangeArgs),
    /// Compare the empirical characteristic function against the exact one.
    CfCheck(CfCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateArg {
    #[value(name = "LL")]
    Ll,
    #[value(name = "LH")]
    Lh,
    #[value(name = "HL")]
    Hl,
    #[value(name = "HH")]
    Hh,
}

impl FromStr for StateArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <StateArg as ValueEnum>::from_str(s, true)
    }
}

impl StateArg {
    pub fn to_state(self) -> kljn_core::LoopState {
        match self {
            StateArg::Ll => kljn_core::LoopState::LL,
            StateArg::Lh => kljn_core::LoopState::LH,
            StateArg::Hl => kljn_core::LoopState::HL,
            StateArg::Hh => kljn_core::LoopState::HH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    Stable,
    Uniform,
}

impl FromStr for NoiseArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <NoiseArg as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    Johnson,
    Explicit,
}

impl FromStr for ScalingArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <ScalingArg as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistinguisherArg {
    CorrSign,
    TailQuadrant,
    RefMatch,
}

impl FromStr for DistinguisherArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <DistinguisherArg as ValueEnum>::from_str(s, true)
    }
}

/// Flags shared by every command that builds a resistor pair and a noise
/// assignment. All optional so a `--config` file can fill them in.
#[derive(Args, Debug, Clone)]
pub struct NoiseFlags {
    /// Noise family [default: gaussian]
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    /// Stability parameter for the stable family [default: 2.0]
    #[arg(long)]
    alpha: Option<f64>,
    /// Scaling rule for the low-side magnitude [default: johnson]
    #[arg(long, value_enum)]
    scaling: Option<ScalingArg>,
    /// Noise magnitude at the high resistor (sigma, scale, or half-width) [default: 1.0]
    #[arg(long)]
    high_magnitude: Option<f64>,
    /// Low-side magnitude; required by (and only valid with) explicit scaling
    #[arg(long)]
    low_magnitude: Option<f64>,
    /// Low resistor in ohms [default: 1000]
    #[arg(long)]
    r_low: Option<f64>,
    /// High resistor in ohms [default: 10000]
    #[arg(long)]
    r_high: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Joint resistor state [default: LH]
    #[arg(long)]
    state: Option<StateArg>,
    #[command(flatten)]
    noise: NoiseFlags,
    /// Samples per trace [default: 8192]
    #[arg(long)]
    n: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Optional key=value config file; explicit flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FigureArgs {
    /// Figure id: 2, 3, or 4
    #[arg(long)]
    id: u32,
    /// Output directory for the scatter CSVs and the manifest
    #[arg(long)]
    out_dir: PathBuf,
    /// Samples per dataset [default: 8192]
    #[arg(long)]
    n: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    /// Attack statistic
    #[arg(long, value_enum)]
    distinguisher: Option<DistinguisherArg>,
    /// Tail quantile for tail-quadrant [default: 0.95]
    #[arg(long)]
    q: Option<f64>,
    /// Reference traces per state for ref-match [default: 8]
    #[arg(long)]
    refs_per_state: Option<usize>,
    #[command(flatten)]
    noise: NoiseFlags,
    /// Episodes to run [default: 500]
    #[arg(long)]
    episodes: Option<usize>,
    /// Samples per episode [default: 4096]
    #[arg(long)]
    n: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON report path
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct KeyexchangeArgs {
    /// Kept key bits to produce [default: 128]
    #[arg(long)]
    bits: Option<usize>,
    /// Samples per bit period [default: 4096]
    #[arg(long)]
    samples_per_bit: Option<usize>,
    /// Public thermal constant c in V^2/ohm, sigma^2 = c*R [default: 1e-4]
    #[arg(long)]
    thermal_constant: Option<f64>,
    /// Noise family: gaussian or uniform
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    /// High/low magnitude ratio; defaults to the Johnson ratio sqrt(R_H/R_L)
    #[arg(long)]
    mis_ratio: Option<f64>,
    /// Low resistor in ohms [default: 1000]
    #[arg(long)]
    r_low: Option<f64>,
    /// High resistor in ohms [default: 10000]
    #[arg(long)]
    r_high: Option<f64>,
    /// Give Eve this distinguisher
    #[arg(long, value_enum)]
    eve: Option<DistinguisherArg>,
    /// Tail quantile for Eve's tail-quadrant [default: 0.95]
    #[arg(long)]
    q: Option<f64>,
    /// Reference traces per state for Eve's ref-match [default: 8]
    #[arg(long)]
    refs_per_state: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON summary path
    #[arg(long)]
    out: PathBuf,
    /// Optional per-period CSV path
    #[arg(long)]
    periods_out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CfCheckArgs {
    /// Noise family [default: stable]
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    /// Stability parameter for the stable family [default: 2.0]
    #[arg(long)]
    alpha: Option<f64>,
    /// Model magnitude (sigma, scale, or half-width) [default: 1.0]
    #[arg(long)]
    magnitude: Option<f64>,
    /// Sample count [default: 65536]
    #[arg(long)]
    n: Option<usize>,
    /// First grid point [default: 0.1]
    #[arg(long)]
    t_min: Option<f64>,
    /// Last grid point [default: 3.0]
    #[arg(long)]
    t_max: Option<f64>,
    /// Number of grid points [default: 30]
    #[arg(long)]
    t_steps: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Figure(a) => commands::figure(a),
        Command::Attack(a) => commands::attack(a),
        Command::Keyexchange(a) => commands::keyexchange(a),
        Command::CfCheck(a) => commands::cf_check(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
