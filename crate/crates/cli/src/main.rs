//! `bpm`: simulate the benchmark systems, detect causality in CSV data, and
//! sweep skill against library size.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or usage error,
//! 3 simulation divergence, 4 statistical degeneracy.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use bpm_core::Error;
use clap::{Parser, Subcommand};

use commands::{DetectArgs, SimulateArgs, SweepArgs};
use settings::{DetectSettings, SystemFlags};

#[derive(Debug, Parser)]
#[command(name = "bpm", version, about = "Causality detection with convergent cross mapping and bivariate partial mapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate a benchmark system and write t,X,Y,theta as CSV
    Simulate {
        /// JSON system spec; flags override its fields
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        system: SystemFlags,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run CCM and/or BPM in both directions on a CSV file
    Detect {
        data: PathBuf,
        /// JSON detection settings; flags override its fields
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        settings: Box<DetectSettings>,
        /// Worker threads for (L, replicate) cells
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "bpm-out")]
        out_dir: PathBuf,
    },
    /// Write the per-replicate skill table for a data file or a simulated system
    Sweep {
        data: Option<PathBuf>,
        /// JSON system spec to simulate instead of reading data
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        system: SystemFlags,
        /// JSON detection settings; flags override its fields
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        settings: Box<DetectSettings>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 1,
        Error::Divergence { .. } => 3,
        e if e.is_degenerate() => 4,
        _ => 2,
    }
}

fn run(command: Command) -> bpm_core::Result<()> {
    match command {
        Command::Simulate { config, system, output } => commands::cmd_simulate(&SimulateArgs {
            config,
            system,
            output,
        }),
        Command::Detect {
            data,
            config,
            settings,
            jobs,
            out_dir,
        } => commands::cmd_detect(&DetectArgs {
            data,
            config,
            settings: *settings,
            jobs,
            out_dir,
        }),
        Command::Sweep {
            data,
            spec,
            system,
            config,
            settings,
            jobs,
            output,
        } => commands::cmd_sweep(&SweepArgs {
            data,
            spec,
            system,
            config,
            settings: *settings,
            jobs,
            output,
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
