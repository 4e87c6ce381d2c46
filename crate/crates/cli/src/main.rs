use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use irwal_cli::commands;
use irwal_cli::config::RunConfig;

/// Autoregressive model selection under conditionally heteroscedastic
/// errors: reweighted adaptive-lasso fitting, simulation, and benchmarks.
#[derive(Parser)]
#[command(name = "irwal", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration; flags override file keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base RNG seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory for all artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for the studies; 0 keeps the machine default.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit every series of a CSV panel and write coefficient, volatility,
    /// and fitted-scale artifacts.
    Fit,
    /// Draw one path of the configured process and write it as CSV.
    Simulate,
    /// Inclusion-proportion study over the λ grid.
    BenchInclusion,
    /// One-step-ahead forecast-error study.
    BenchMae,
    /// Sign-recovery trend over ascending sample sizes.
    BenchTrend,
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.display().to_string());
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Cmd::Fit => commands::cmd_fit(&cfg),
        Cmd::Simulate => commands::cmd_simulate(&cfg),
        Cmd::BenchInclusion => commands::cmd_bench_inclusion(&cfg),
        Cmd::BenchMae => commands::cmd_bench_mae(&cfg),
        Cmd::BenchTrend => commands::cmd_bench_trend(&cfg),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
