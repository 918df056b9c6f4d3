use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use povmlab_cli::acceptance;
use povmlab_cli::config::ExperimentConfig;
use povmlab_cli::error::CliError;
use povmlab_cli::experiment::{run_experiment, run_sweep};
use povmlab_cli::export::{self, Format};
use povmlab_cli::report;

/// Numerical laboratory for quantum measurement schemes.
#[derive(Parser)]
#[command(name = "povmlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's output_dir or `.`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: Format,
        /// Worker threads for sweep rows (1 = fully sequential).
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Override the config's random seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the sweep declared in a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: Format,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Regenerate a human-readable summary from stored JSON results.
    Report {
        /// Path to a results.json produced by `run` or `sweep`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Execute the acceptance suite.
    Selftest,
}

fn load_config(path: &PathBuf, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn export_records(
    records: &[povmlab_cli::experiment::ResultRecord],
    out: Option<PathBuf>,
    config: &ExperimentConfig,
    format: Format,
) -> Result<(), CliError> {
    let dir = out
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    match format {
        Format::Json => {
            let file = export::write_json(records, &dir)?;
            eprintln!("wrote {}", file.display());
        }
        Format::Csv => {
            let file = export::write_csv(records, &dir)?;
            eprintln!("wrote {}", file.display());
        }
        Format::Plotdata => {
            let files = export::write_plotdata(records, &dir)?;
            for f in &files {
                eprintln!("wrote {}", f.display());
            }
            // Scalars still land in a JSON next to the plot files.
            let file = export::write_json(records, &dir)?;
            eprintln!("wrote {}", file.display());
        }
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            format,
            threads,
            seed,
        }
        | Command::Sweep {
            config,
            out,
            format,
            threads,
            seed,
        } => {
            let config = load_config(&config, seed)?;
            let records = if config.sweep.is_some() {
                run_sweep(&config, threads)?
            } else {
                vec![run_experiment(&config)?]
            };
            print!("{}", report::render(&records));
            export_records(&records, out, &config, format)?;
            let failed: Vec<&str> = records
                .iter()
                .flat_map(|r| r.checks.iter())
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            if !failed.is_empty() {
                return Err(CliError::Tolerance(format!(
                    "{} check(s) failed: {}",
                    failed.len(),
                    failed.join(", ")
                )));
            }
            Ok(())
        }
        Command::Report { input } => {
            let text = std::fs::read_to_string(&input)?;
            let records = export::read_json(&text)?;
            print!("{}", report::render(&records));
            Ok(())
        }
        Command::Selftest => {
            let results = acceptance::run_all();
            let mut all_passed = true;
            for r in &results {
                println!("{}", r.summary_line());
                for line in &r.details {
                    println!("{line}");
                }
                all_passed &= r.passed;
            }
            if all_passed {
                println!("all {} acceptance criteria passed", results.len());
                Ok(())
            } else {
                Err(CliError::Tolerance(
                    "one or more acceptance criteria failed".into(),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
