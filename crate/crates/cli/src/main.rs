//! `wavesim`: simulate platoons, analyze trajectory logs, compare before/after
//! metrics, render driver reports and search green-wave speeds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit status 2: bad arguments, unreadable or invalid input files.
pub const EXIT_INPUT: u8 = 2;
/// Exit status 3: well-formed input whose data cannot be processed.
pub const EXIT_DATA: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Data(anyhow::Error),
}

/// Tags an error with the exit status it maps to.
pub trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }

    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "wavesim",
    version,
    about = "Car-following platoon simulator and trajectory analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run scenario files and write log, events, report and manifest.
    Simulate(SimulateArgs),
    /// Per-vehicle metrics of a trajectory log.
    Analyze(AnalyzeArgs),
    /// Paired before/after comparison of metrics files.
    Compare(CompareArgs),
    /// Six-panel driver report for one vehicle of a log.
    Ecd(EcdArgs),
    /// Constant speeds that meet every signal on green.
    Greenwave(GreenwaveArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario file; repeat to run several.
    #[arg(long = "scenario", required = true)]
    pub scenarios: Vec<PathBuf>,
    /// Output directory. Several scenarios go to one subdirectory each.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scenarios simulated in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Parameter file for the quick-look report.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MetricsFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// Loop length in m; 0 for open road.
    #[arg(long)]
    pub loop_length: Option<f64>,
    /// Parameter file; defaults to $WAVESIM_PARAMS.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: MetricsFormat,
    /// One record per vehicle and complete lap.
    #[arg(long)]
    pub per_lap: bool,
    /// Comma-separated vehicle ids to keep.
    #[arg(long, value_delimiter = ',')]
    pub vehicles: Vec<String>,
    /// Comma-separated laps to keep (with --per-lap).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub laps: Vec<i64>,
    #[arg(long)]
    pub vehicle_length: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TableFormat {
    Text,
    Csv,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Directory (or single file) of pretest metrics JSON.
    #[arg(long)]
    pub pre: PathBuf,
    /// Directory (or single file) of posttest metrics JSON.
    #[arg(long)]
    pub post: PathBuf,
    /// Comma-separated variables; all by default.
    #[arg(long, value_delimiter = ',')]
    pub vars: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: TableFormat,
}

#[derive(Args, Debug)]
pub struct EcdArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub vehicle: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub loop_length: Option<f64>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Virtual followers simulated behind the subject.
    #[arg(long = "virtual", default_value_t = 8)]
    pub n_virtual: usize,
}

#[derive(Args, Debug)]
pub struct GreenwaveArgs {
    /// TOML file with `[[signals]]` tables.
    #[arg(long)]
    pub signals: PathBuf,
    #[arg(long)]
    pub vmin: f64,
    #[arg(long)]
    pub vmax: f64,
    #[arg(long)]
    pub resolution: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub start_s: f64,
    #[arg(long, default_value_t = 0.0)]
    pub start_t: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Ecd(a) => commands::ecd(&a),
        Command::Greenwave(a) => commands::greenwave(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
