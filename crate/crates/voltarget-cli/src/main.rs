//! `voltarget` — volatility-target index experiments from a config file.
//!
//! Every subcommand reads one TOML configuration, runs deterministically
//! (same seed + config = byte-identical CSV, regardless of `--threads`), and
//! writes one CSV file into the output directory.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use voltarget_cli::commands;
use voltarget_cli::config::Experiment;

#[derive(Parser)]
#[command(
    name = "voltarget",
    about = "Volatility-target index analytics: limiting-diffusion multipliers and \
             Monte Carlo validation experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the CSV file.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = auto).  Results do not depend on this.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// U(lambda), V(lambda) and their analytic bounds over the lambda grid.
    Multipliers(RunArgs),
    /// Kernel density of the terminal discrete-index log-level vs the
    /// limiting normal density.
    Density(RunArgs),
    /// Sample volatility of the continuous index vs the limiting volatility.
    VolConvergence(RunArgs),
    /// Monte Carlo call price vs the limiting lognormal price.
    PriceConvergence(RunArgs),
    /// Bump-and-reprice Monte Carlo vega vs the converted rho sensitivity.
    Vega(RunArgs),
    /// Law-of-large-numbers and central-limit statistics of the variance
    /// driver.
    LlnClt(RunArgs),
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (args, run): (&RunArgs, fn(&Experiment, &std::path::Path) -> Result<PathBuf>) =
        match &cli.command {
            Command::Multipliers(a) => (a, commands::cmd_multipliers),
            Command::Density(a) => (a, commands::cmd_density),
            Command::VolConvergence(a) => (a, commands::cmd_vol_convergence),
            Command::PriceConvergence(a) => (a, commands::cmd_price_convergence),
            Command::Vega(a) => (a, commands::cmd_vega),
            Command::LlnClt(a) => (a, commands::cmd_lln_clt),
        };
    if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    let experiment = Experiment::from_file(&args.config, args.seed)?;
    let path = run(&experiment, &args.out)?;
    println!("wrote {}", path.display());
    Ok(())
}
