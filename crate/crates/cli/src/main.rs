use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nitrial_cli::{cmd_analyze, cmd_dump_catalog, cmd_report, cmd_simulate, dump_sample, write_atomic, CliError, ReportFormat};
use nitrial_core::estimators::advise_estimand;

#[derive(Parser)]
#[command(name = "nitrial", version, about = "Non-inferiority trial estimators and simulation studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Events {
    /// No trial-specific intercurrent events.
    None,
    /// They occur and the affected participants can be identified.
    Identifiable,
    /// They occur but cannot be identified.
    Unidentifiable,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation study from a JSON config.
    Simulate {
        config: PathBuf,
        /// Two-sided interval level; overrides the config.
        #[arg(long)]
        level: Option<f64>,
        #[arg(long, env = "NITRIAL_THREADS")]
        threads: Option<usize>,
    },
    /// Apply the estimators to one trial dataset.
    Analyze {
        /// CSV with columns y, z, c and any covariates.
        data: PathBuf,
        config: PathBuf,
        #[arg(long)]
        level: Option<f64>,
        #[arg(long, default_value = "analysis_results.csv")]
        out: PathBuf,
    },
    /// Recommend estimands for the trial's intercurrent events.
    Advise {
        #[arg(long, value_enum)]
        trial_specific_ies: Events,
    },
    /// Tabulate a simulation summary.
    Report {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "md")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the scenario catalog, or one simulated dataset with --sample.
    DumpCatalog {
        #[arg(long)]
        sample: Option<String>,
        #[arg(long, default_value_t = nitrial_cli::config::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        rep: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(&p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, level, threads } => {
            let dir = cmd_simulate(&config, level, threads)?;
            println!("wrote {}", dir.display());
        }
        Command::Analyze { data, config, level, out } => {
            let res = cmd_analyze(&data, &config, level, &out)?;
            print!("{}", res.table);
            if res.all_failed() {
                return Err(CliError::AllEstimatorsFailed);
            }
        }
        Command::Advise { trial_specific_ies } => {
            let (occur, identifiable) = match trial_specific_ies {
                Events::None => (false, false),
                Events::Identifiable => (true, true),
                Events::Unidentifiable => (true, false),
            };
            print!("{}", advise_estimand(occur, identifiable));
        }
        Command::Report { dir, format, out } => emit(&cmd_report(&dir, format)?, out)?,
        Command::DumpCatalog { sample, seed, rep, out } => {
            let text = match sample {
                Some(id) => dump_sample(&id, seed, rep)?,
                None => cmd_dump_catalog(),
            };
            emit(&text, out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nitrial: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
