//! `qgsim` command-line driver.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Exit;

#[derive(Parser)]
#[command(name = "qgsim", version, about = "Dissipative quasi-geostrophic simulator and property checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write the time series and manifest.
    Run {
        config: PathBuf,
        /// Store the state every N steps (at steps that are also diagnostic samples).
        #[arg(long, value_name = "N")]
        snapshot_every: Option<usize>,
        /// Also write a P5 greyscale image of every stored state.
        #[arg(long)]
        heatmap: bool,
        /// Overrides `output_dir` from the configuration.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run a group of property checks and write their reports.
    Check {
        config: PathBuf,
        /// One of: critical, oracles, inequalities, subcritical, smallness, all.
        #[arg(long, default_value = "critical")]
        suite: String,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run the configuration once per value of one key and compare the results.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Print the shell-averaged coefficient modulus of a snapshot as CSV.
    Spectrum { snapshot: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run { config, snapshot_every, heatmap, out } => commands::run(&config, snapshot_every, heatmap, out),
        Command::Check { config, suite, out } => commands::check(&config, &suite, out),
        Command::Sweep { config, param, values, out } => commands::sweep(&config, &param, &values, out),
        Command::Spectrum { snapshot } => commands::spectrum(&snapshot),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qgsim: {e}");
            ExitCode::from(e.code())
        }
    }
}

impl Exit {
    fn code(&self) -> u8 {
        match self {
            Exit::CheckFailed(_) => 1,
            Exit::Usage(_) => 2,
            Exit::BlowUp(_) => 3,
        }
    }
}
