//! `csimon`: simulate CSI, build pose maps, train and evaluate the pose
//! network, and track breathing.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "csimon", version, about = "WiFi CSI pose and respiration monitoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a scenario file, or the built-in two-receiver walk.
    Simulate(SimulateArgs),
    /// Remove phase offsets from a trace and dump the clean streams.
    Sanitize(SanitizeArgs),
    /// Build network inputs from two synchronized receiver traces.
    Posemap(PosemapArgs),
    /// Train the pose network on a dataset directory.
    Train(TrainArgs),
    /// Predict pose figures for every input of a dataset directory.
    Infer(InferArgs),
    /// Score predicted figures against annotations with PCS.
    Evaluate(EvaluateArgs),
    /// Extract the breathing curve, rate and apnea intervals from a trace.
    Breathe(BreatheArgs),
}

#[derive(Args, Debug)]
struct OutDir {
    /// Directory receiving the artifacts; created if missing.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario TOML file.
    #[arg(long, conflicts_with = "walk", required_unless_present = "walk")]
    scenario: Option<PathBuf>,
    /// Simulate the built-in walk seen by two perpendicular receivers.
    #[arg(long)]
    walk: bool,
    /// Walk duration in seconds.
    #[arg(long, default_value_t = 10.0, requires = "walk")]
    duration: f64,
    /// Run seed; replaces the scenario's own seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args, Debug)]
struct SanitizeArgs {
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args, Debug)]
struct PosemapArgs {
    /// Receiver traces, given twice: rx1 then rx2.
    #[arg(long, num_args = 1, required = true)]
    trace: Vec<PathBuf>,
    /// Directory of annotation figures named by figure index.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Keep every `stride`-th figure.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[command(flatten)]
    out: OutDir,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Arch {
    Standard,
    Reduced,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Dataset directory with `inputs/` and `figures/`.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Arch::Standard)]
    arch: Arch,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args, Debug)]
struct InferArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset directory; only `inputs/` is read.
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Directory of predicted figures.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of annotation figures with the same file names.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "25,30,40,50")]
    psi: Vec<f64>,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args, Debug)]
struct BreatheArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Ground-truth CSV from `simulate` for the correlation score.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    out: OutDir,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => match (a.scenario, a.walk) {
            (Some(path), _) => commands::simulate_scenario(&path, a.seed, &a.out.out_dir),
            (None, _) => commands::simulate_walk(a.duration, a.seed.unwrap_or(0), &a.out.out_dir),
        },
        Command::Sanitize(a) => commands::sanitize(&a.trace, &a.out.out_dir),
        Command::Posemap(a) => commands::posemap(&a.trace, a.truth.as_deref(), a.stride, &a.out.out_dir),
        Command::Train(a) => {
            let arch = match a.arch {
                Arch::Standard => csimon_core::net::Architecture::standard(),
                Arch::Reduced => csimon_core::net::Architecture::reduced(),
            };
            commands::train(&a.dataset, a.epochs, a.lr, a.batch, a.seed, arch, &a.out.out_dir)
        }
        Command::Infer(a) => commands::infer(&a.checkpoint, &a.dataset, &a.out.out_dir),
        Command::Evaluate(a) => commands::evaluate(&a.pred, &a.truth, &a.psi, &a.out.out_dir),
        Command::Breathe(a) => commands::breathe(&a.trace, a.truth.as_deref(), &a.out.out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
