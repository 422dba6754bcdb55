//! Command-line interface.
//!
//! Exit codes: 0 on success, 2 on configuration errors (bad flags, unknown
//! problems or keys, unreadable files), 3 on numerical failures
//! (divergence, unstable steps, failed brackets).

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::harness::config::{ExperimentConfig, KvConfig};
use crate::harness::runners;

#[derive(Parser)]
#[command(name = "neutron-pinn", about = "Neutron-diffusion PINN solver and criticality search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct CommonArgs {
    /// Key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Problem override: p1, p2, p3 or p4.
    #[arg(long)]
    problem: Option<String>,
    /// Search method override: grid, binary or quadfit.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a PINN and emit metrics, history and checkpoints.
    Solve(CommonArgs),
    /// Run the classical reference solver and emit its field data.
    Oracle(CommonArgs),
    /// Run a criticality search over trained candidates.
    Search(CommonArgs),
    /// Run an ablation sweep of solve runs.
    Sweep(CommonArgs),
    /// Merge run metrics under the output directory into one table.
    Report(CommonArgs),
}

fn resolve(args: &CommonArgs) -> crate::Result<ExperimentConfig> {
    let mut kv = match &args.config {
        Some(path) => KvConfig::from_file(path)?,
        None => KvConfig::default(),
    };
    if let Some(seed) = args.seed {
        kv.set("seed", &seed.to_string());
    }
    if let Some(out) = &args.out {
        kv.set(
            "out",
            out.to_str().ok_or_else(|| Error::InvalidConfig("non-UTF-8 --out".into()))?,
        );
    }
    if let Some(problem) = &args.problem {
        kv.set("problem", problem);
    }
    if let Some(method) = &args.method {
        kv.set("search.method", method);
    }
    ExperimentConfig::from_kv(&kv)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::Parse { .. }
        | Error::Io(_)
        | Error::DimensionMismatch { .. } => 2,
        Error::Divergence { .. }
        | Error::UnstableStep { .. }
        | Error::NoConvergence { .. }
        | Error::NoBracket { .. }
        | Error::DegenerateFit
        | Error::OutsideMap { .. } => 3,
    }
}

/// Run the CLI against explicit arguments; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes, not config errors.
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return code;
        }
    };
    let (args, run): (&CommonArgs, fn(&ExperimentConfig) -> crate::Result<()>) =
        match &cli.command {
            Command::Solve(a) => (a, runners::run_solve),
            Command::Oracle(a) => (a, runners::run_oracle),
            Command::Search(a) => (a, runners::run_search),
            Command::Sweep(a) => (a, runners::run_sweep),
            Command::Report(a) => (a, runners::run_report),
        };
    let cfg = match resolve(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match run(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    run(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flags_and_problems_exit_2() {
        assert_eq!(run(["neutron-pinn", "solve", "--bogus"]), 2);
        assert_eq!(run(["neutron-pinn", "solve", "--problem", "p9"]), 2);
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run(["neutron-pinn", "--help"]), 0);
    }

    #[test]
    fn solve_round_trips_through_the_cli() {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("cfg.txt");
        std::fs::write(
            &config,
            "problem = p1\nnet.width = 8\nnet.depth = 4\nsample.pde = 60\n\
             sample.initial = 20\nsample.boundary = 20\ntrain.epochs = 5\n\
             rar.enabled = false\neval.nx = 10\neval.times = 5\n",
        )
        .unwrap();
        let out = dir.path().join("run");
        let code = run([
            "neutron-pinn",
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "3",
        ]);
        assert_eq!(code, 0);
        assert!(out.join("metrics.csv").exists());
        let echo = std::fs::read_to_string(out.join("config.txt")).unwrap();
        assert!(echo.contains("seed = 3"));
    }

    #[test]
    fn missing_config_file_exits_2() {
        assert_eq!(run(["neutron-pinn", "solve", "--config", "/nonexistent/x.txt"]), 2);
    }
}
