use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oilforest::experiment::{execute_with_threads, Command, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "oilforest",
    version,
    about = "Random-forest experiments on daily panels"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the modeling dataset and summary statistics
    Ingest(Common),
    /// Write a synthetic dataset (and price series)
    Synth(Common),
    /// Fit the forest and write the model
    Fit(Common),
    /// Compare the forest with OLS and AR(1), plus the OOB MSE curve
    Eval(Common),
    /// Predictor importance, optionally per date range
    Importance(Common),
    /// Partial-effect grids
    Pdp(Common),
    /// Horizon-shifted forecasting table
    Forecast(Common),
    /// Table over min_split_size and tree counts
    Sweep(Common),
    /// Everything above plus a run manifest
    Run(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Ingest(a) => (Command::Ingest, a),
        Cmd::Synth(a) => (Command::Synth, a),
        Cmd::Fit(a) => (Command::Fit, a),
        Cmd::Eval(a) => (Command::Eval, a),
        Cmd::Importance(a) => (Command::Importance, a),
        Cmd::Pdp(a) => (Command::Pdp, a),
        Cmd::Forecast(a) => (Command::Forecast, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Run(a) => (Command::Run, a),
    };
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    Overrides {
        seed: args.seed,
        output_dir: args.out,
    }
    .apply(&mut cfg);
    match execute_with_threads(command, &cfg, args.threads) {
        Ok(files) => {
            for f in files {
                println!("{}", cfg.output_dir.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
