//! Library half of the `evmgen` binary, so commands can be driven from tests.

pub mod args;
mod bench;
mod run;

use std::path::{Path, PathBuf};

use evmgen_core::cdg::{build_cdg, Cdg};
use evmgen_core::cfg::{build_cfg, Cfg};
use evmgen_core::chain::{EmbeddedProvider, RemoteProvider};
use evmgen_core::evm::disassemble;
use evmgen_core::search::SearchError;
use evmgen_core::testgen::{parse_accounts, ConfigError, Wei};
use evmgen_core::{ContractArtifact, GenConfig, TraceProvider};

pub use args::{BenchArgs, Cli, Command, RunArgs, SearchFlags};
pub use bench::{cmd_bench, BenchSummary};
pub use run::{cmd_run, RunFiles};

/// Process exit codes.
pub mod exit {
    pub const FULL_COVERAGE: i32 = 0;
    pub const PARTIAL_COVERAGE: i32 = 2;
    pub const INPUT_ERROR: i32 = 3;
    pub const CHAIN_ERROR: i32 = 4;
    pub const INTERNAL_ERROR: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Chain(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => exit::INPUT_ERROR,
            CliError::Chain(_) => exit::CHAIN_ERROR,
            CliError::Internal(_) => exit::INTERNAL_ERROR,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Chain(_) => CliError::Chain(e.to_string()),
            SearchError::Testgen(_) => CliError::Input(e.to_string()),
            SearchError::Trace(_) | SearchError::Encoding(_) => CliError::Internal(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Internal(format!("cannot write {}: {e}", path.display()))
}

/// Builds the generator configuration: defaults, then the config file,
/// then the accounts file, then individual flags.
pub fn resolve_config(flags: &SearchFlags, seed: Option<u64>) -> Result<GenConfig, CliError> {
    let mut config = match &flags.config {
        Some(path) => GenConfig::load(path)?,
        None => GenConfig::default(),
    };
    if let Some(path) = &flags.accounts {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let entries = parse_accounts(&text)?;
        if entries.is_empty() {
            return Err(CliError::Input(format!("{} lists no accounts", path.display())));
        }
        let balances = entries
            .iter()
            .enumerate()
            .map(|(i, (_, b))| Wei(b.unwrap_or_else(|| config.balance_of(i))))
            .collect();
        config.accounts = entries.into_iter().map(|(a, _)| a).collect();
        config.balances = balances;
    }
    if let Some(n) = flags.population {
        config.population_size = n;
    }
    if let Some(n) = flags.max_generations {
        config.max_generations = n;
    }
    if let Some(p) = flags.seeding_probability {
        config.seeding_probability = p;
    }
    if let Some(s) = seed {
        config.rng_seed = s;
    }
    config.validate()?;
    Ok(config)
}

/// A contract after initialization: artifact, CFG and trimmed CDG.
pub struct Analysis {
    pub artifact: ContractArtifact,
    pub cfg: Cfg,
    pub cdg: Cdg,
}

pub fn analyze(artifact: ContractArtifact) -> Result<Analysis, CliError> {
    let instructions = disassemble(&artifact.runtime_bytecode).map_err(|e| CliError::Input(e.to_string()))?;
    let cfg = build_cfg(&instructions);
    let cdg = build_cdg(&cfg, &artifact.abi);
    for w in &cdg.warnings {
        log::warn!("{}: {w:?}", artifact.name);
    }
    Ok(Analysis { artifact, cfg, cdg })
}

pub fn load_artifact(bytecode: &Path, abi: &Path, deploy: Option<&Path>) -> Result<ContractArtifact, CliError> {
    ContractArtifact::load(bytecode, abi, deploy).map_err(|e| CliError::Input(e.to_string()))
}

/// The remote node named by the environment, else the embedded interpreter.
pub fn provider() -> Box<dyn TraceProvider> {
    match RemoteProvider::from_env() {
        Some(remote) => {
            log::info!("executing against {}", remote.url());
            Box::new(remote)
        }
        None => Box::new(EmbeddedProvider),
    }
}

/// Contract names with a runtime bytecode file in `dir`, sorted.
pub fn fixture_names(dir: &Path) -> Result<Vec<String>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("cannot read {}: {e}", dir.display())))?;
    let mut names: Vec<String> = entries
        .filter_map(Result::ok)
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".bin-runtime")).map(str::to_string))
        .collect();
    names.sort();
    Ok(names)
}

/// Writes `contents` to `dir/name`, creating `dir` as needed.
pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
    Ok(path)
}
