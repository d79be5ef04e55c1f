//! `thermal-wigner` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thermal_wigner::run::{execute, write_output, Command, RunConfig};

#[derive(Parser)]
#[command(name = "thermal-wigner", version, about = "Semiclassical thermal Wigner functions and observables")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Mean energy and heat capacity table (CSV).
    Observables(RunArgs),
    /// Normalized Wigner grid (JSON) and its marginals (CSV).
    Wigner(RunArgs),
    /// Nelson surface of section (CSV).
    Poincare(RunArgs),
    /// Energy levels (CSV).
    Spectrum(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (0: all cores); overrides the configuration.
    #[arg(long)]
    threads: Option<usize>,
    /// Random seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; defaults to `output` in the configuration, then
    /// `thermal-wigner-<command>.<csv|json>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(command: Command, args: RunArgs) -> thermal_wigner::Result<Vec<PathBuf>> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = args
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("thermal-wigner-{}.{}", command.name(), command.extension())));
    let output = execute(command, &cfg)?;
    write_output(&output, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Observables(a) => (Command::Observables, a),
        Cmd::Wigner(a) => (Command::Wigner, a),
        Cmd::Poincare(a) => (Command::Poincare, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
    };
    match run(command, args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
