use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ram_runner::artifact::{recheck_run, write_run};
use ram_runner::config::ExperimentConfig;
use ram_runner::experiments::run_experiment;
use ram_runner::tune::tune_sigma;
use ram_runner::verify::{format_report, oracle_checks};
use ram_runner::RunnerError;

#[derive(Parser)]
#[command(
    name = "ram",
    version,
    about = "Repelling-attracting Metropolis experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to runs/<config file stem>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every sampler against exact transition matrices.
    Verify,
    /// Pick a jumping scale from the config's [tune] grid.
    Tune {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute a run directory's summary from its samples files.
    Recheck { dir: PathBuf },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, RunnerError> {
    ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)
}

fn run(cli: Cli) -> Result<bool, RunnerError> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| {
                PathBuf::from("runs").join(config.file_stem().unwrap_or_default())
            });
            let output = run_experiment(&cfg)?;
            write_run(&dir, &cfg, &output)?;
            println!(
                "{:<12} {:>6} {:>9} {:>8} {:>10} {:>8} {:>6}",
                "kernel", "chains", "length", "burn-in", "accept", "N_pi", "F_err"
            );
            for k in &output.summary.kernels {
                let ferr = k.frequency_error.map_or("-".into(), |f| format!("{f:.4}"));
                println!(
                    "{:<12} {:>6} {:>9} {:>8} {:>10.5} {:>8.3} {:>6}",
                    k.kernel,
                    k.chains,
                    k.length,
                    k.burn_in,
                    k.acceptance_rate,
                    k.evals_per_iteration,
                    ferr
                );
            }
            println!("wrote {}", dir.display());
            Ok(true)
        }
        Command::Verify => {
            let checks = oracle_checks();
            print!("{}", format_report(&checks));
            Ok(checks.iter().all(|c| c.passed))
        }
        Command::Tune { config } => {
            let report = tune_sigma(&load(&config)?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
        Command::Recheck { dir } => {
            let r = recheck_run(&dir)?;
            println!(
                "{} chains re-read; summary {}",
                r.chains,
                if r.matches { "matches" } else { "DIFFERS" }
            );
            Ok(r.matches)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
