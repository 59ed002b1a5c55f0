use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use delaybeam_cli::{execute, Command, Invocation};

#[derive(Parser)]
#[command(
    name = "delaybeam",
    version,
    about = "Delayed-damping beam simulations and stability maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Integrate one trajectory and fit its energy decay.
    Simulate(Common),
    /// Sample the stability region on an (alpha, xi) grid.
    Region(Common),
    /// Simulate every point of an (alpha, xi) grid in parallel.
    Sweep(Common),
    /// Solve the static problem in closed form and against finite differences.
    Resolvent(Common),
}

#[derive(Args)]
struct Common {
    /// Config file with dotted keys (`beam.tension = 1.0`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,
    /// `key=value`, applied after the config file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::Region(a) => (Command::Region, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Resolvent(a) => (Command::Resolvent, a),
    };
    let result = Invocation::load(
        command,
        args.config.as_deref(),
        &args.overrides,
        args.out,
        args.workers,
    )
    .and_then(|inv| execute(&inv));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("delaybeam: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
