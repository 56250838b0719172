use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fmlp_cli::selfcheck::run_selfcheck;
use fmlp_cli::summary::{read_records, Summary};
use fmlp_cli::{run_experiment, CliError, ExperimentConfig};
use fmlp_core::data::{gen_waveform, write_labeled_csv, WaveSpec};

#[derive(Parser)]
#[command(name = "fmlp", version, about = "Functional MLP experiments on sampled curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a three-class waveform dataset as CSV.
    GenWaves {
        #[arg(long, default_value_t = 150)]
        n_per_class: usize,
        #[arg(long, default_value_t = 101)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        noise_sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print comparison tables for a JSON-lines results file.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Compare the main code paths against brute-force references.
    Selfcheck,
}

fn execute(command: Command) -> Result<bool, CliError> {
    match command {
        Command::GenWaves {
            n_per_class,
            m,
            noise_sd,
            seed,
            out,
        } => {
            let ds = gen_waveform(&WaveSpec {
                n_per_class,
                m,
                noise_sd,
                seed,
            })?;
            write_labeled_csv(&ds, &out)?;
            eprintln!("wrote {} curves to {}", ds.len(), out.display());
        }
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let out = run_experiment(&config)?;
            print!("{}", out.summary.render());
            eprintln!("records written to {}", config.output.display());
        }
        Command::Report { input } => {
            let summary = Summary::from_records(&read_records(&input)?)?;
            print!("{}", summary.render());
        }
        Command::Selfcheck => {
            let checks = run_selfcheck();
            for c in &checks {
                println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("fmlp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
