//! Shared setup for the criterion benches.

use evmgen_core::cdg::build_cdg;
use evmgen_core::cfg::build_cfg;
use evmgen_core::evm::disassemble;
use evmgen_core::{Cdg, ContractArtifact};

/// A fixture artifact with its trimmed control-dependency graph.
pub fn prepared(name: &str) -> (ContractArtifact, Cdg) {
    let artifact = evmgen_fixtures::by_name(name)
        .unwrap_or_else(|| panic!("no fixture {name}"))
        .artifact();
    let cfg = build_cfg(&disassemble(&artifact.runtime_bytecode).expect("fixture decodes"));
    let cdg = build_cdg(&cfg, &artifact.abi);
    (artifact, cdg)
}
