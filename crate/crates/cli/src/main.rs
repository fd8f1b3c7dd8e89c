//! Command-line front end for the jump-transport laboratory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jumplab_cli::config::{
    parse_json, CoeffsDoc, CompareDoc, MeRunDoc, PdeRunDoc, ScenarioDoc, WalkDoc,
};
use jumplab_cli::{scenarios, CliError};

#[derive(Parser)]
#[command(
    name = "jumplab",
    version,
    about = "Jump-process transport laboratory: lattice balance dynamics, random walkers, and diffusion solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV artifacts and report.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the configured random seed (ignored by deterministic runs).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a kernel/rate pair to its transport-coefficient profile.
    Coeffs {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evolve the lattice balance equation and export snapshots.
    MeRun {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the continuous-time random-walk ensemble.
    Walk {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve a diffusion problem (evolve, steady state, or decay fit).
    PdeRun {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare two field snapshots (CSV) over a region.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run an experiment preset (S1..S5) or a custom pipeline.
    Scenario {
        /// Scenario id: S1_reflecting_smooth, S2_absorbing_smooth,
        /// S3_sharp_interface, S4_clt, S5_coefficient_sweep, custom.
        id: String,
        /// JSON configuration; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the configured random seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn read_config(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Coeffs { common } => {
            let doc: CoeffsDoc = parse_json(&read_config(&common.config)?)?;
            scenarios::run_coeffs(&doc, &common.out)?;
        }
        Command::MeRun { common } => {
            let doc: MeRunDoc = parse_json(&read_config(&common.config)?)?;
            scenarios::run_me(&doc, &common.out)?;
        }
        Command::Walk { common } => {
            let mut doc: WalkDoc = parse_json(&read_config(&common.config)?)?;
            if let Some(seed) = common.seed {
                doc.seed = seed;
            }
            scenarios::run_walk(&doc, &common.out)?;
        }
        Command::PdeRun { common } => {
            let doc: PdeRunDoc = parse_json(&read_config(&common.config)?)?;
            scenarios::run_pde(&doc, &common.out)?;
        }
        Command::Compare { common } => {
            let doc: CompareDoc = parse_json(&read_config(&common.config)?)?;
            scenarios::run_compare(&doc, &common.out)?;
        }
        Command::Scenario {
            id,
            config,
            out,
            seed,
        } => {
            let mut doc: ScenarioDoc = match &config {
                Some(path) => parse_json(&read_config(path)?)?,
                None => parse_json(&format!("{{\"scenario\": \"{id}\"}}"))?,
            };
            if doc.name() != id {
                return Err(CliError::Validation(format!(
                    "scenario id `{id}` does not match config scenario `{}`",
                    doc.name()
                )));
            }
            if let Some(seed) = seed {
                doc.override_seed(seed);
            }
            scenarios::run_scenario(&doc, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("jumplab: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
