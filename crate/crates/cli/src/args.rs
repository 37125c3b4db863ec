use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use evmgen_core::Algorithm;

#[derive(Debug, Parser)]
#[command(name = "evmgen", version, about = "Search-based branch-coverage test generation for EVM bytecode")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a test suite for one contract.
    Run(RunArgs),
    /// Run both engines over a fixture directory and compare them.
    Bench(BenchArgs),
}

/// Search settings shared by `run` and `bench`; flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct SearchFlags {
    /// Flat TOML file with generator settings.
    #[arg(long, value_name = "F")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub population: Option<usize>,
    #[arg(long, value_name = "N")]
    pub max_generations: Option<usize>,
    /// Probability of drawing inputs from constants found in the bytecode.
    #[arg(long, value_name = "P")]
    pub seeding_probability: Option<f64>,
    /// Funded accounts, one `address [balance]` per line.
    #[arg(long, value_name = "F")]
    pub accounts: Option<PathBuf>,
    /// Leave wall-clock fields at zero so reports are reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Runtime bytecode, hex.
    #[arg(long, value_name = "F")]
    pub bytecode: PathBuf,
    /// Contract ABI, JSON.
    #[arg(long, value_name = "F")]
    pub abi: PathBuf,
    /// Creation bytecode, hex. A plain wrapper is used when absent.
    #[arg(long, value_name = "F")]
    pub deploy_bytecode: Option<PathBuf>,
    #[arg(long, default_value = "dynamosa")]
    pub algorithm: Algorithm,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Also write the control-flow graph as DOT and JSON.
    #[arg(long)]
    pub dump_cfg: bool,
    /// Also write the control-dependency graph as DOT and JSON.
    #[arg(long)]
    pub dump_cdg: bool,
    /// No per-generation progress on stderr.
    #[arg(long, short)]
    pub quiet: bool,
    #[command(flatten)]
    pub search: SearchFlags,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Directory of `<name>.bin-runtime` / `<name>.abi` (and optional `<name>.bin`) files.
    #[arg(long, value_name = "DIR")]
    pub fixtures: PathBuf,
    /// Seeds per (contract, engine) pair.
    #[arg(long, value_name = "N", default_value_t = 10)]
    pub runs: u64,
    /// First seed; runs use consecutive seeds from here.
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Only these contracts (repeatable).
    #[arg(long = "contract", value_name = "NAME")]
    pub contracts: Vec<String>,
    /// Seeding probability for the fuzzer alone, overriding the shared value.
    #[arg(long, value_name = "P")]
    pub fuzzer_seeding_probability: Option<f64>,
    /// No per-run progress on stderr.
    #[arg(long, short)]
    pub quiet: bool,
    #[command(flatten)]
    pub search: SearchFlags,
}
