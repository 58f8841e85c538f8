use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tddgeom::experiment::{dump_config, load_config, recipe, resolve_out_dir, run, ExperimentConfig, OUT_DIR_ENV};
use tddgeom::validation::{run_suite, ValidationOptions};
use tddgeom::{Error, Result};

/// Interference, coverage and spectral efficiency of dynamic-TDD networks.
///
/// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
/// 4 validation failure.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $TDDGEOM_OUT, then the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in recipe reproducing one figure.
    Recipe {
        /// Recipe name, e.g. fig4-cov-dl-macro.
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the recipe's configs instead of running them.
        #[arg(long)]
        dump: bool,
    },
    /// Run the self-check suite.
    Validate {
        /// Smaller Monte Carlo budgets.
        #[arg(long)]
        quick: bool,
    },
}

fn run_all(configs: Vec<ExperimentConfig>, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    for mut cfg in configs {
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let dir = resolve_out_dir(out.as_deref(), &cfg);
        let written = run(&cfg, &dir)?;
        println!("wrote {} ({} rows)", written.csv.display(), written.table.rows.len());
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => run_all(vec![load_config(&config)?], seed, out),
        Command::Recipe { name, seed, out, dump } => {
            let configs = recipe(&name)?;
            if dump {
                for c in &configs {
                    println!("{}", dump_config(c));
                }
                return Ok(());
            }
            run_all(configs, seed, out)
        }
        Command::Validate { quick } => {
            let report = run_suite(ValidationOptions { quick, ..Default::default() });
            println!("{report}");
            report.into_result().map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Io { .. }) {
                eprintln!("(output directory can be set with --out or {OUT_DIR_ENV})");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
