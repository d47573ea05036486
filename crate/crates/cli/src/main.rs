use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sqg_cli::config::{Mode, RunConfig};
use sqg_cli::execute::{execute, RunOptions};

#[derive(Parser)]
#[command(name = "sqg", version = env!("SQG_BUILD_ID"), about = "Stochastic SQG simulations and stationary statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a single path, with optional checkpoints.
    Simulate(Common),
    /// Ensemble statistics and Itô balance residuals.
    Ensemble(Common),
    /// Time-averaged stationary moments, residuals and histograms.
    Stationary(Common),
    /// Stationary runs along a decreasing sequence of alphas.
    Sweep(Common),
    /// Finite-dimensional Hamiltonian test rig against Gibbs averages.
    Sandbox(Common),
    /// Run the acceptance criteria.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration (optional for verify).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to `output.dir` or `runs/<mode>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue a simulate run from a checkpoint file.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Replace every configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "SQG_THREADS", default_value_t = 0)]
    threads: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Ensemble(a) => (Mode::Ensemble, a),
        Command::Stationary(a) => (Mode::Stationary, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Sandbox(a) => (Mode::Sandbox, a),
        Command::Verify(a) => (Mode::Verify, a),
    };
    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None if mode == Mode::Verify => String::new(),
        None => {
            eprintln!("error: --config is required for {}", mode.name());
            return ExitCode::from(2);
        }
    };
    let cfg = match RunConfig::parse_with_seed(&text, Some(mode), args.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            return ExitCode::from(2);
        }
    };
    eprintln!("# resolved configuration\n{}", cfg.to_toml());
    let out = args
        .out
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(mode.name()));
    let opts = RunOptions { out, resume: args.resume, threads: args.threads };
    match execute(&cfg, &opts) {
        Ok(outcome) => {
            for line in &outcome.summary {
                eprintln!("{line}");
            }
            eprintln!("manifest: {}", outcome.manifest.display());
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
