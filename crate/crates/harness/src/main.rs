use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use ppc_harness::config::{validate_config, Scenario};
use ppc_harness::error::HarnessError;
use ppc_harness::scenario::run_scenario;

/// Population-code simulations: Poisson encodings, a coordinate-transform
/// circuit, a recurrent Kalman population, and closed-loop eye control.
#[derive(Parser)]
#[command(name = "ppc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; writes trace.csv, trace.meta.json, and figure.svg.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario: encode-demo | transform-demo | kalman-demo | eye-control | ablation
    #[arg(long)]
    scenario: Option<String>,
    /// JSON configuration file; full defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed override (64-bit unsigned)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run the ablated variant of eye-control
    #[arg(long)]
    ablation: bool,
}

fn run(args: &RunArgs) -> Result<(), HarnessError> {
    let raw = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Config(vec![format!("config {}: {e}", path.display())])
        })?,
        None => String::new(),
    };
    let mut cfg = validate_config(&raw).map_err(HarnessError::Config)?;
    if let Some(name) = &args.scenario {
        cfg.scenario = Scenario::parse(name).ok_or_else(|| {
            HarnessError::Config(vec![format!(
                "scenario: unknown scenario '{name}' (expected one of {})",
                Scenario::ALL.map(|s| s.name()).join(", ")
            )])
        })?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = run_scenario(&cfg, args.ablation, &args.out)?;
    println!("wrote {}", out.trace_path.display());
    println!("wrote {}", out.meta_path.display());
    println!("wrote {}", out.figure_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // malformed invocations are configuration errors
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let Command::Run(args) = &cli.command;
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
