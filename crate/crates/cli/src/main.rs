/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{CliError, Globals};

#[derive(Parser)]
#[command(name = "qparity", version, about = "Qubit-oscillator interference simulator")]
struct Cli {
    /// JSON file with command parameters; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fock cutoff.
    #[arg(long = "n-max", global = true)]
    n_max: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for Monte Carlo fan-out.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prepare a state from an alternating sideband sequence.
    Prepare(PrepareFlags),
    /// Scan verification fringes; phase-averaged unless --phases is given.
    Fringe(FringeFlags),
    /// Run the operator-identity, POVM and closed-form checks.
    Validate(ValidateFlags),
    /// Fit phonon populations from a Rabi flop and estimate w.
    Fit(FitFlags),
    /// Simulate a blue-sideband Rabi flop of a prepared state.
    RabiFlop(RabiFlopFlags),
    /// Mean maximum contrast against phase instability.
    SweepInstability(SweepFlags),
    /// Contrast and visibility of two-branch cat states.
    CatVisibility(CatFlags),
    /// Optimize detection areas under random preparation phases.
    OptimizeDetection(DetectFlags),
}

#[derive(Args, Serialize)]
pub struct PrepareFlags {
    /// Number of preparation pulses.
    #[arg(long = "n")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Comma-separated pulse phases; random when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    phases: Option<Vec<f64>>,
    /// Comma-separated pulse areas; half transfer when omitted.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    areas: Option<Vec<f64>>,
    /// Use areas A/√j instead of half transfer.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    compensated: bool,
}

#[derive(Args, Serialize)]
pub struct FringeFlags {
    #[arg(long = "n")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    w: Option<f64>,
    /// w-mixture, w-power, qubit-dephase, full-dephase or classical-mixture.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    /// single or two.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t2: Option<f64>,
    /// red-blue or blue-red.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    phases: Option<Vec<f64>>,
    /// Extract Fourier harmonics of two-pulse fringes.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    harmonics: Option<bool>,
}

#[derive(Args, Serialize)]
pub struct ValidateFlags {
    /// Reduced draw counts and cutoffs.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    quick: bool,
    /// Flip the phase-shift sign of one identity (negative control).
    #[arg(long = "inject-fault")]
    #[serde(skip_serializing_if = "Option::is_none")]
    fault: Option<String>,
}

#[derive(Args, Serialize)]
pub struct FitFlags {
    /// Rabi-flop CSV with columns time_ms, pg, shots.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    /// Single-pulse fringe CSV with columns phase, pg[, shots].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    fringe: Option<String>,
    /// Simulate the flop and fringe instead of reading files.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    demo: bool,
    #[arg(long = "n")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    w: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u32>,
    /// Verification sideband: red or blue.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<String>,
    #[arg(long = "verification-area")]
    #[serde(skip_serializing_if = "Option::is_none")]
    verification_area: Option<f64>,
    #[arg(long = "n-fit-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    n_fit_max: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    resamples: Option<usize>,
}

#[derive(Args, Serialize)]
pub struct RabiFlopFlags {
    #[arg(long = "n")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    phases: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u32>,
    /// Record length in ms.
    #[arg(long = "t-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    /// Decay rate γ₀ in 1/ms.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma0: Option<f64>,
}

#[derive(Args, Serialize)]
pub struct SweepFlags {
    /// sideband or rabi-gate.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<String>,
    #[arg(long = "n")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Comma-separated instability scales δφ.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    dphi: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<usize>,
    #[arg(long = "trotter-steps")]
    #[serde(skip_serializing_if = "Option::is_none")]
    trotter_steps: Option<usize>,
}

#[derive(Args, Serialize)]
pub struct CatFlags {
    /// Coherent amplitude of the excited branch, as re or re,im.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
    /// Coherent amplitude of the ground branch; defaults to alpha.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<Vec<f64>>,
    /// Comma-separated excited-branch weights.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    /// same, balanced or swapped.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    measurement: Option<String>,
}

#[derive(Args, Serialize)]
pub struct DetectFlags {
    #[arg(long = "n")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<usize>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let g = Globals {
        config: cli.config,
        seed: cli.seed,
        n_max: cli.n_max,
        out: cli.out,
    };
    match &cli.command {
        Command::Prepare(f) => commands::prepare(&g, f),
        Command::Fringe(f) => commands::fringe(&g, f),
        Command::Validate(f) => commands::validate(&g, f),
        Command::Fit(f) => commands::fit(&g, f),
        Command::RabiFlop(f) => commands::rabi_flop(&g, f),
        Command::SweepInstability(f) => commands::sweep_instability(&g, f),
        Command::CatVisibility(f) => commands::cat_visibility(&g, f),
        Command::OptimizeDetection(f) => commands::optimize_detection(&g, f),
    }
}

fn subcommand_usage(name: &str) -> String {
    use clap::CommandFactory;
    let mut cmd = Cli::command().bin_name("qparity");
    cmd.build();
    match cmd.find_subcommand_mut(name) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Prepare(_) => "prepare",
        Command::Fringe(_) => "fringe",
        Command::Validate(_) => "validate",
        Command::Fit(_) => "fit",
        Command::RabiFlop(_) => "rabi-flop",
        Command::SweepInstability(_) => "sweep-instability",
        Command::CatVisibility(_) => "cat-visibility",
        Command::OptimizeDetection(_) => "optimize-detection",
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qparity {name}: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("{}", subcommand_usage(name));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
