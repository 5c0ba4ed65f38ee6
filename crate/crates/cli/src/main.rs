//! `foodnet`: calibrate models from supply-use tables, run shock
//! scenarios and sweeps, derive analyses, and serve the HTTP API.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "foodnet", version, about = "Shock propagation in food trade and production networks")]
struct Cli {
    /// TOML file with defaults for options not given on the command line
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic world as input tables
    Generate(GenerateArgs),
    /// Calibrate a model from input tables
    Calibrate(CalibrateArgs),
    /// Run a baseline and a shocked scenario and report relative losses
    Simulate(SimulateArgs),
    /// Run every single-target shock and stream the losses to disk
    Sweep(SweepArgs),
    /// Trade network metrics per product layer
    Metrics(MetricsArgs),
    /// Rank the shocks by the loss they cause in one country and product
    Exposure(ExposureArgs),
    /// Split losses into cross-layer and within-layer parts
    Decompose(DecomposeArgs),
    /// Domestic and imported shares of first-step availability
    Reexports(ReexportsArgs),
    /// Serve the HTTP API
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    countries: usize,
    #[arg(long)]
    products: usize,
    #[arg(long)]
    processes: usize,
    /// Probability that a process draws on a given product
    #[arg(long, default_value_t = 0.05)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Directory with supply.csv, use.csv, demand.csv and registry.csv
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory for model.json and diagnostics.csv
    #[arg(long)]
    out: Option<PathBuf>,
    /// unified or verbatim
    #[arg(long)]
    mode: Option<String>,
    /// Number of steps simulated after the initial one
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Shock target as COUNTRY:PRODUCT; repeatable
    #[arg(long = "shock", value_name = "COUNTRY:PRODUCT")]
    shocks: Vec<String>,
    /// Shock every product of this country
    #[arg(long, value_name = "COUNTRY")]
    shock_all_products: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-step loss series
    #[arg(long)]
    series: bool,
    /// Record all seven quantities in the trajectory files
    #[arg(long)]
    full: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Sweep directory; an existing sweep there is resumed
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores
    #[arg(long)]
    threads: Option<usize>,
    /// binary or csv
    #[arg(long)]
    format: Option<String>,
    /// Scenarios per chunk file; 0 means one chunk per shocked country
    #[arg(long)]
    chunk_len: Option<usize>,
    /// Stop after writing this many new chunks
    #[arg(long)]
    max_chunks: Option<usize>,
    /// Comma-separated country codes to shock (default: all)
    #[arg(long, value_delimiter = ',')]
    countries: Vec<String>,
    /// Comma-separated product codes to shock (default: all)
    #[arg(long, value_delimiter = ',')]
    products: Vec<String>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Smallest link volume kept
    #[arg(long)]
    threshold: Option<f64>,
    /// Output CSV file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExposureArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    country: String,
    #[arg(long)]
    product: String,
    /// Read losses from a completed sweep instead of recomputing them
    #[arg(long)]
    sweep: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output CSV file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    shock_country: String,
    #[arg(long)]
    input_product: String,
    /// Comma-separated observed products (default: all)
    #[arg(long, value_delimiter = ',')]
    products: Vec<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReexportsArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Output CSV file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Completed sweep directory to answer exposure and sweep queries from
    #[arg(long)]
    sweep: Option<PathBuf>,
    #[arg(long)]
    addr: Option<String>,
    #[arg(long)]
    max_targets: Option<usize>,
    #[arg(long)]
    max_horizon: Option<usize>,
    #[arg(long)]
    max_scenarios: Option<usize>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<foodnet_core::Error>() {
            return e.exit_code() as u8;
        }
        if cause.is::<ConfigError>() || cause.is::<std::io::Error>() {
            return 1;
        }
        if cause.is::<commands::UsageError>() {
            return 2;
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let config = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        commands::run(cli.command, &config)
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
