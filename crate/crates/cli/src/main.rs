use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use surfmimo::analysis::McsTable;
use surfmimo::propagation::MaterialLibrary;
use surfmimo::{Error, ErrorCategory};

mod commands;
mod scene;

#[derive(Debug, Parser)]
#[command(name = "surfmimo", about = "Simulate MIMO links over conductive surfaces")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize per-subcarrier channel matrices.
    Channel(commands::ChannelArgs),
    /// Capacity, conditioning and MCS rate of a CSI file.
    Analyze(commands::AnalyzeArgs),
    /// Throughput against distance for several link modes.
    Sweep(commands::SweepArgs),
    /// Throughput against distance for several antenna-contact separations.
    Separation(commands::SeparationArgs),
    /// Response of a surface link to a short pulse.
    Pulse(commands::PulseArgs),
    /// Multi-band aggregate rate over a surface link.
    Aggregate(commands::AggregateArgs),
    /// Emission map of a surface-fed transmitter against an antenna.
    Radiation(commands::RadiationArgs),
    /// Several links sharing a surface by carrier sense.
    Share(commands::ShareArgs),
}

fn version() -> String {
    format!(
        "{} (material presets {}, MCS table {})",
        surfmimo::io::TOOL_VERSION,
        MaterialLibrary::builtin().version,
        McsTable::builtin().version
    )
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Config => 3,
        ErrorCategory::Model => 4,
        ErrorCategory::Io => 5,
    }
}

fn main() -> ExitCode {
    let matches = Cli::command().version(version()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let result = match cli.command {
        Command::Channel(a) => commands::channel(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Separation(a) => commands::separation(a),
        Command::Pulse(a) => commands::pulse(a),
        Command::Aggregate(a) => commands::aggregate(a),
        Command::Radiation(a) => commands::radiation(a),
        Command::Share(a) => commands::share(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Where a command writes its CSV; stdout when absent.
#[derive(Debug, Clone, clap::Args, serde::Serialize)]
pub struct Output {
    /// Output CSV file.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script that plots the CSV.
    #[arg(long, requires = "out")]
    pub plot_script: Option<PathBuf>,
}
