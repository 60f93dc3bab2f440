mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::commands::CliError;
use crate::config::RunConfig;

/// Calibrate 2D pure-jump Lévy and symmetric α-stable models by matching
/// characteristic functions.
#[derive(Debug, Parser)]
#[command(name = "levycal", version)]
struct Cli {
    /// Log more (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Paths {
    /// JSON run configuration; omitted keys take the defaults listed in `levycal --help`.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Input file; overrides `input` in the config.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Output file or directory; overrides `output` in the config.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate symmetric α-stable increments (settings under `simulation`) to an increments CSV.
    SimulateStable {
        #[command(flatten)]
        paths: Paths,
    },
    /// Simulate compound-Poisson increments with truncated-normal jumps to an increments CSV.
    SimulateLevy {
        #[command(flatten)]
        paths: Paths,
    },
    /// Empirical characteristic function of an increments CSV on a square grid.
    Ecf {
        #[command(flatten)]
        paths: Paths,
        /// Half-width of the frequency grid.
        #[arg(long, default_value_t = 3.0)]
        extent: f64,
        /// Grid points per axis.
        #[arg(long, default_value_t = 21)]
        grid: usize,
    },
    /// Calibrate a model to an increments CSV; writes result.json, form.json, trace.csv and a plot CSV.
    Calibrate {
        #[command(flatten)]
        paths: Paths,
        /// Points per axis of the nu grid written in Lévy mode.
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// Pairwise stable index of every ticker pair in a price CSV.
    Stocks {
        #[command(flatten)]
        paths: Paths,
    },
    /// Evaluate a saved form (form.json) on angles or a planar grid.
    Eval {
        /// Form JSON written by `calibrate`.
        #[arg(short, long)]
        form: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Angles in [0, 2pi) for spectral forms.
        #[arg(long, default_value_t = 360)]
        angles: usize,
        /// Half-width of the planar grid for density forms.
        #[arg(long, default_value_t = 5.0)]
        extent: f64,
        /// Points per axis of the planar grid.
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
}

fn main() -> ExitCode {
    let help = format!(
        "Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 numerical failure.\n\
         Errors go to stderr as ERROR:<category>: <message>.\n\n\
         Configuration defaults (JSON):\n{}",
        RunConfig::defaults_json()
    );
    let matches = match Cli::command().after_long_help(help).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("ERROR:usage: {}", e.render().to_string().trim_start_matches("error: ").trim_end());
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ERROR:usage: {e}");
            return ExitCode::from(1);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (category, code) = e.category();
            eprintln!("ERROR:{category}: {}", CliError::message(&e));
            ExitCode::from(code)
        }
    }
}
