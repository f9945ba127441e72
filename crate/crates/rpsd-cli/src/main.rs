use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rpsd_cli::config::load_config;
use rpsd_cli::error::CliError;
use rpsd_cli::experiment::{output_dir, run_experiment, OUTPUT_DIR_ENV};
use rpsd_cli::plot::{plot, Criterion};

#[derive(Parser)]
#[command(
    name = "rpsd",
    version,
    about = "Randomized subspace proximal gradient experiments",
    long_about = None,
    after_help = format!("The {OUTPUT_DIR_ENV} environment variable overrides the configured output directory.")
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML or JSON configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render one comparison criterion from metrics CSVs into an SVG.
    Plot {
        #[arg(long, value_enum)]
        criterion: CriterionArg,
        #[arg(long)]
        out: PathBuf,
        /// Overlay the per-row median of the input curves.
        #[arg(long)]
        median: bool,
        /// Metrics CSV files produced by `run`.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    SuboptIters,
    PatternIters,
    SuboptExplored,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::SuboptIters => Criterion::SuboptIters,
            CriterionArg::PatternIters => Criterion::PatternIters,
            CriterionArg::SuboptExplored => Criterion::SuboptExplored,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let config = load_config(&config)?;
            let manifest = run_experiment(&config)?;
            let dir = output_dir(&config);
            println!(
                "wrote {} runs (F* = {}) to {}",
                manifest.runs.len(),
                manifest.f_star,
                dir.display()
            );
            Ok(())
        }
        Command::Plot {
            criterion,
            out,
            median,
            inputs,
        } => {
            let svg = plot(&inputs, criterion.into(), median)?;
            std::fs::write(&out, svg)
                .map_err(|e| CliError::data(format!("cannot write {}: {e}", out.display())))?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
