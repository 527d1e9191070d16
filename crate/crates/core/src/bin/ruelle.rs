//! Thin command-line front end over the experiment runner. The library and
//! its examples are the primary interface; this binary only dispatches
//! configs and prints machine-readable output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ruelle::runner::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "ruelle", version, about = "Transfer-operator experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one experiment config, writing manifest + results.
    Run {
        config: PathBuf,
        /// Override the seed recorded in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory (otherwise $RUELLE_OUTPUT_ROOT
        /// joined with the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge completed run directories into one CSV table on stdout.
    Report { dirs: Vec<PathBuf> },
    /// Parse and validate a config; exit nonzero listing every violation.
    Validate { config: PathBuf },
    /// Print the config's alphabet quadrature rule as CSV.
    DumpAlphabet { config: PathBuf },
}

fn load(config: &PathBuf) -> ruelle::Result<ExperimentConfig> {
    ExperimentConfig::from_file(config)
}

fn real_main() -> ruelle::Result<()> {
    match Cli::parse().command {
        Command::Run { config, seed, out } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out.unwrap_or_else(|| runner::resolve_output_dir(&cfg));
            let dir = runner::run(&cfg, &dir)?;
            println!("{}", dir.display());
        }
        Command::Report { dirs } => {
            let table = runner::report(&dirs)?;
            print!("{}", table.to_csv());
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            cfg.validate()?;
            println!("ok");
        }
        Command::DumpAlphabet { config } => {
            let cfg = load(&config)?;
            let spec = cfg
                .alphabet
                .as_ref()
                .ok_or_else(|| ruelle::Error::Config("alphabet: required".into()))?;
            let alphabet = runner::build_alphabet(spec)?;
            print!("{}", runner::dump_alphabet_csv(&alphabet));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({ "error": e.to_string() });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
