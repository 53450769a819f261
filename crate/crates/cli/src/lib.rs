//! Batch driver for the relboltz kinetics library: config ingestion, suite
//! orchestration and CSV output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

pub use commands::Suite;
pub use config::{Command, RunConfig};
pub use error::CliError;

use output::OutputDir;

/// Outcome of one invocation.
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub suites: Vec<Suite>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(Suite::passed)
    }

    /// Names of failed checks, `suite/check`.
    pub fn failures(&self) -> Vec<String> {
        self.suites
            .iter()
            .flat_map(|s| {
                let empty = s.outcomes.is_empty().then(|| format!("{}/<no checks>", s.name));
                s.outcomes.iter().filter(|o| !o.passed).map(move |o| format!("{}/{}", s.name, o.name)).chain(empty)
            })
            .collect()
    }
}

/// Loads the config, runs `cmd` and writes `config.txt`, the suite CSVs and `summary.csv`.
///
/// Precedence, lowest first: defaults, the config file, `overrides`, then
/// `out` and `seed`.
pub fn execute(
    cmd: Command,
    config: Option<&Path>,
    overrides: &[String],
    out: Option<&Path>,
    seed: Option<u64>,
    timestamp: bool,
) -> Result<RunReport, CliError> {
    let mut all = overrides.to_vec();
    all.push(format!("command={}", cmd.name()));
    if let Some(o) = out {
        all.push(format!("out={}", o.display()));
    }
    if let Some(s) = seed {
        all.push(format!("seed={s}"));
    }
    let cfg = RunConfig::load(config, &all)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("relboltz-out").join(cmd.name()));
    let out = OutputDir::create(&dir, timestamp)?;
    out.stamped("config.txt", &cfg.echo())?;
    let suites = commands::run(cmd, &cfg, &out)?;
    out.stamped("summary.csv", commands::summary(&suites).as_str())?;
    Ok(RunReport { out_dir: dir, suites })
}
