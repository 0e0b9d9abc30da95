//! Command-line entry point.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;
use serde_json::Value;

use crate::artifacts::{sha256_hex, Artifacts, Manifest};
use crate::commands::execute;
use crate::config::{merge, resolve, Command, ExperimentConfig, Format, GlobalFlags};
use crate::error::{LabError, LabResult};
use crate::parallel::with_threads;

#[derive(Debug, Parser)]
#[command(name = "chaoslab", version, about = "Malliavin density, Stein and OU experiments")]
pub struct Cli {
    /// Base seed of all random streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// Resolves flags and the optional config file into a full config.
pub fn configure(cli: Cli) -> LabResult<ExperimentConfig> {
    let file: Option<Value> = match &cli.config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| LabError::usage(format!("config file {}: {e}", p.display())))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| LabError::usage(format!("config file {}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    let globals = GlobalFlags { seed: cli.seed, threads: cli.threads, out: cli.out, format: cli.format };
    let (globals, command) = merge(file.as_ref(), &globals, cli.command)?;
    resolve(globals, command)
}

/// Runs a config end to end: artifacts, then the manifest.
pub fn run(cfg: &ExperimentConfig) -> LabResult<Value> {
    let start = Instant::now();
    let mut art = Artifacts::new(&cfg.out)?;
    let config = cfg.to_json();
    let config_text = serde_json::to_string(&config).expect("config serializes");
    art.write(
        "config.json",
        format!("{}\n", serde_json::to_string_pretty(&config).expect("config serializes")).as_bytes(),
    )?;
    let (result, threads) = with_threads(cfg.threads, || (execute(cfg, &mut art), rayon::current_num_threads()))?;
    let manifest = Manifest {
        tool: "chaoslab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: chaoslab_core::VERSION.into(),
        command: cfg.command.name().into(),
        seed: cfg.seed,
        threads,
        config,
        config_sha256: sha256_hex(config_text.as_bytes()),
        wall_time_s: start.elapsed().as_secs_f64(),
        artifacts: Vec::new(),
    };
    art.finish(manifest)?;
    result
}

/// Parses `args`, runs, prints the summary and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = configure(cli).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(summary) => {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
