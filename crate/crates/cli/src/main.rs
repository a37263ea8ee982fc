//! `quantid`: config-driven runner for the quantizer-design and
//! identification-simulation experiments.

mod config;
mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::CommandKind;
use crate::run::{run, Invocation};

#[derive(Parser)]
#[command(
    name = "quantid",
    about = "Optimal quantizer design and FIR identification experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on worker threads for trial-parallel commands (0 = all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Design a quantizer and emit its profile/table artifacts
    Design(CommonArgs),
    /// Simulate one identification run and emit the estimation record
    Simulate(CommonArgs),
    /// Compare the coarse-optimal quantizer against the uniform baseline
    Compare(CommonArgs),
    /// Tabulate the resolution-vs-data-length bound trade-off
    Bounds(CommonArgs),
    /// Emit the coarse recursion tail and its inverse-square fit
    Asymptotics(CommonArgs),
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::Design(_) => CommandKind::Design,
            Command::Simulate(_) => CommandKind::Simulate,
            Command::Compare(_) => CommandKind::Compare,
            Command::Bounds(_) => CommandKind::Bounds,
            Command::Asymptotics(_) => CommandKind::Asymptotics,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Design(a)
            | Command::Simulate(a)
            | Command::Compare(a)
            | Command::Bounds(a)
            | Command::Asymptotics(a) => a,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let args = cli.command.args();
    let inv = Invocation {
        command: cli.command.kind(),
        config_path: args.config.clone(),
        seed_override: args.seed,
        threads: args.threads,
        out_dir: args.out.clone(),
    };
    match run(&inv) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
