use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ep_atlas::harness::config::{Exact, Experiment, RawConfig};
use ep_atlas::harness::{execute, HarnessError, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "ep-atlas", version, about = "Spectra, exceptional points and collectivity of H0 - i Lambda V V^T")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue trajectories of picket fences with EP energies
    Fig1(Flags),
    /// EP positions over an N ladder with the accumulation point
    Fig2(Flags),
    /// B(lambda) for the picket, perturbed and power-law systems
    Fig3(Flags),
    /// EPs of the ideal and the perturbed picket fence
    Fig4(Flags),
    /// Eigenvalue trajectories of one model
    Sweep(Flags),
    /// Exceptional points of one model
    Eps(Flags),
    /// B(lambda) of one model
    Bcurve(Flags),
    /// Order parameter Gamma_0/N and its derivative
    Order(Flags),
    /// Two-level EP loop and omega comparison
    Loop(Flags),
    /// Compensation classes of power-law families
    Classify(Flags),
}

#[derive(Args)]
struct Flags {
    /// Flat key-value TOML file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of levels
    #[arg(long)]
    n: Option<usize>,
    /// First coupling strength of the grid
    #[arg(long)]
    lambda_start: Option<f64>,
    /// Last coupling strength of the grid
    #[arg(long)]
    lambda_stop: Option<f64>,
    /// Grid spacing
    #[arg(long)]
    lambda_step: Option<f64>,
    /// Coupling phase in degrees
    #[arg(long)]
    phi: Option<f64>,
    /// Coupling exponent, e.g. 1 or 1/2
    #[arg(long)]
    r: Option<String>,
    /// Level exponent, e.g. 4
    #[arg(long)]
    t: Option<String>,
    /// Level-perturbation amplitude
    #[arg(long)]
    amplitude: Option<f64>,
    /// Seed of the level perturbations
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, env = "EP_ATLAS_OUT")]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    jobs: Option<usize>,
}

impl Command {
    fn split(self) -> (Experiment, Flags) {
        match self {
            Command::Fig1(f) => (Experiment::Fig1, f),
            Command::Fig2(f) => (Experiment::Fig2, f),
            Command::Fig3(f) => (Experiment::Fig3, f),
            Command::Fig4(f) => (Experiment::Fig4, f),
            Command::Sweep(f) => (Experiment::Sweep, f),
            Command::Eps(f) => (Experiment::Eps, f),
            Command::Bcurve(f) => (Experiment::Bcurve, f),
            Command::Order(f) => (Experiment::Order, f),
            Command::Loop(f) => (Experiment::Loop, f),
            Command::Classify(f) => (Experiment::Classify, f),
        }
    }
}

fn run(experiment: Experiment, flags: Flags) -> Result<(), HarnessError> {
    let file = match &flags.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    let cli = RawConfig {
        n: flags.n,
        lambda_start: flags.lambda_start,
        lambda_stop: flags.lambda_stop,
        lambda_step: flags.lambda_step,
        phi: flags.phi,
        r: flags.r.map(Exact::Text),
        t: flags.t.map(Exact::Text),
        amplitude: flags.amplitude,
        seed: flags.seed,
        out: flags.out,
        format: flags.format,
        jobs: flags.jobs,
        ..RawConfig::default()
    };
    let (cfg, placement) = file.overridden_by(cli).resolve(experiment)?;
    let manifest = execute(&cfg, &placement)?;
    let dir = placement.out.join(experiment.name());
    for f in &manifest.files {
        println!("{}  {}", f.sha256, dir.join(&f.name).display());
    }
    eprintln!("{experiment}: {} files in {:.2} s", manifest.files.len(), manifest.wall_time_seconds);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (experiment, flags) = cli.command.split();
    match run(experiment, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
