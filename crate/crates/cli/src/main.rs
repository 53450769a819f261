use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use relboltz_cli::{execute, Command};

/// Relativistic Boltzmann kinetics: verification suites, cross sections,
/// Newtonian-limit studies and near-vacuum solves.
#[derive(Debug, Parser)]
#[command(name = "relboltz", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// Flat key=value config file (`#` starts a comment).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// key=value settings that override the config file.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory (default relboltz-out/<command>).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Omit the timestamp line from config.txt and summary.csv.
    #[arg(long)]
    no_timestamp: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args.command, args.config.as_deref(), &args.overrides, args.out.as_deref(), args.seed, !args.no_timestamp) {
        Ok(report) => {
            for s in &report.suites {
                println!("{} {}", if s.passed() { "PASS" } else { "FAIL" }, s.name);
            }
            println!("output written to {}", report.out_dir.display());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                for f in report.failures() {
                    eprintln!("failed: {f}");
                }
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("relboltz: {e}");
            ExitCode::from(2)
        }
    }
}
