use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tpa_cli::config::ScanConfig;
use tpa_cli::figures::{run_figure, FigureOptions};
use tpa_cli::scan::run_scan;
use tpa_cli::validate::{run_validation, Level};
use tpa_core::TpaError;

const EXIT_VALIDATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "tpa", version, about = "Two-photon absorption in Doppler-broadened three-level atoms")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "TPA_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep one parameter and write a CSV table.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output path of the configuration; stdout if neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the dataset behind figure 2, 3, 4 or 5.
    Figure {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=5))]
        fig: u8,
        #[arg(long, value_delimiter = ',')]
        a_values: Option<Vec<f64>>,
        #[arg(long, default_value_t = 20.0)]
        gamma_v_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the self-consistency report.
    Validate {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<TpaError> for Failure {
    fn from(e: TpaError) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.into())
        } else {
            Failure::Usage(e.into())
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")
            .map_err(Failure::Usage)?;
    }
    match cli.command {
        Command::Scan { config, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))
                .map_err(Failure::Usage)?;
            let cfg = ScanConfig::from_json(&text).map_err(|e| Failure::Usage(e.into()))?;
            let table = run_scan(&cfg)?;
            let path = out.or_else(|| cfg.output.clone());
            table.emit(path.as_deref()).context("writing table").map_err(Failure::Usage)?;
            Ok(0)
        }
        Command::Figure { fig, a_values, gamma_v_max, points, out } => {
            let opts = FigureOptions { a_values, gamma_v_max, points, ..FigureOptions::default() };
            let table = run_figure(fig, &opts)?;
            table.emit(out.as_deref()).context("writing table").map_err(Failure::Usage)?;
            Ok(0)
        }
        Command::Validate { level } => {
            let report = run_validation(level)?;
            println!("{report}");
            Ok(if report.passed() { 0 } else { EXIT_VALIDATION })
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
