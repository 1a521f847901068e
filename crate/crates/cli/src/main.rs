mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use yieldgap::io::{LoadMode, OutputFormat, DATA_DIR_ENV};

/// Input planning, impact assessment and population runs for wheat farms.
#[derive(Debug, Parser)]
#[command(name = "yieldgap", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Output format.
    #[arg(long, global = true, default_value = "table", value_parser = parse_format)]
    pub format: OutputFormat,
    /// Write results here instead of standard output.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Abort on the first invalid input row instead of skipping it.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Suppress warnings about skipped rows.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    /// Directory searched for relative data paths.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
}

impl GlobalArgs {
    pub fn load_mode(&self) -> LoadMode {
        if self.strict {
            LoadMode::Strict
        } else {
            LoadMode::Lenient
        }
    }
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit stress-response curves to observed input/yield frontiers.
    Calibrate(commands::CalibrateArgs),
    /// Profit-maximizing target yield and inputs.
    Optimize(commands::OptimizeArgs),
    /// Midpoint and endpoint impacts of an inventory or farm records.
    Assess(commands::AssessArgs),
    /// Run a scenario over a farm population.
    Simulate(commands::ScenarioArgs),
    /// Run a scenario once per value of a price grid.
    Sweep(commands::SweepArgs),
    /// Population summary with impact categories ranked per damage unit.
    Report(commands::ScenarioArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(dir) = &cli.global.data_dir {
        std::env::set_var(DATA_DIR_ENV, dir);
    }
    let result = match &cli.command {
        Command::Calibrate(a) => commands::calibrate(a, &cli.global),
        Command::Optimize(a) => commands::optimize(a, &cli.global),
        Command::Assess(a) => commands::assess(a, &cli.global),
        Command::Simulate(a) => commands::simulate(a, &cli.global),
        Command::Sweep(a) => commands::sweep(a, &cli.global),
        Command::Report(a) => commands::report(a, &cli.global),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
