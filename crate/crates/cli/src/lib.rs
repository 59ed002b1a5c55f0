//! Command-line front end: config parsing, the four commands and their
//! CSV/JSON artifacts.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod region;
pub mod resolvent;
pub mod setup;
pub mod simulate;
pub mod sweep;

use std::path::{Path, PathBuf};

pub use config::{ConfigMap, RunConfig};
pub use error::CliError;

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Region,
    Sweep,
    Resolvent,
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: ConfigMap,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

impl Invocation {
    /// Reads the config file (if any) and applies `key=value` overrides in order.
    pub fn load(
        command: Command,
        config_path: Option<&Path>,
        overrides: &[String],
        out: PathBuf,
        workers: Option<usize>,
    ) -> Result<Self, CliError> {
        let mut config = match config_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                ConfigMap::parse(&text)?
            }
            None => ConfigMap::default(),
        };
        for o in overrides {
            config.apply_override(o)?;
        }
        Ok(Self {
            command,
            config,
            out,
            workers,
        })
    }
}

/// Resolves the config, writes its echo and runs the command.
pub fn execute(inv: &Invocation) -> Result<(), CliError> {
    let cfg = inv.config.resolve()?;
    if inv.workers == Some(0) {
        return Err(CliError::Config("--workers must be positive".into()));
    }
    std::fs::create_dir_all(&inv.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", inv.out.display())))?;
    std::fs::write(inv.out.join(RESOLVED_CONFIG), inv.config.resolved_text())?;
    match inv.command {
        Command::Simulate => simulate::run(&cfg, &inv.out),
        Command::Region => region::run(&cfg, &inv.out),
        Command::Sweep => sweep::run(&cfg, &inv.out, inv.workers),
        Command::Resolvent => resolvent::run(&cfg, &inv.out),
    }
}
