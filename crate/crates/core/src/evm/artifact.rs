use std::path::{Path, PathBuf};

use crate::evm::abi::{parse_abi, FunctionAbi};
use crate::evm::asm::Assembler;
use crate::evm::opcode::*;
use crate::evm::scrape::{scrape_constants, ConstantPools};
use crate::evm::selector::parse_signature_file;
use crate::evm::{disassemble, EvmError};
use crate::types::hex_decode;

/// Everything the generator knows about the contract under test.
#[derive(Debug, Clone)]
pub struct ContractArtifact {
    pub name: String,
    pub deploy_bytecode: Vec<u8>,
    pub runtime_bytecode: Vec<u8>,
    pub abi: Vec<FunctionAbi>,
    pub pools: ConstantPools,
}

impl ContractArtifact {
    /// Builds an artifact; without deploy code a constructor-less wrapper that
    /// returns the runtime code is synthesized.
    pub fn new(
        name: impl Into<String>,
        runtime_bytecode: Vec<u8>,
        deploy_bytecode: Option<Vec<u8>>,
        abi: Vec<FunctionAbi>,
    ) -> Result<Self, EvmError> {
        let runtime = disassemble(&runtime_bytecode)?;
        let mut pools = scrape_constants(&runtime);
        let deploy_bytecode = match deploy_bytecode {
            Some(code) => {
                // Deploy code ends in appended data; scrape what decodes.
                if let Ok(ins) = disassemble(&code) {
                    pools.merge(&scrape_constants(&ins));
                }
                code
            }
            None => deploy_wrapper(&runtime_bytecode)?,
        };
        Ok(ContractArtifact {
            name: name.into(),
            deploy_bytecode,
            runtime_bytecode,
            abi,
            pools,
        })
    }

    /// Loads hex bytecode and ABI files. A `<stem>.signatures` file next to
    /// the ABI (selector sidecar) overrides computed selectors.
    pub fn load(
        runtime_path: &Path,
        abi_path: &Path,
        deploy_path: Option<&Path>,
    ) -> Result<Self, EvmError> {
        let runtime = read_hex(runtime_path)?;
        let deploy = deploy_path.map(read_hex).transpose()?;
        let abi_text = read_text(abi_path)?;
        let mut abi = parse_abi(&abi_text)?;
        let sidecar = abi_path.with_extension("signatures");
        if sidecar.exists() {
            let sigs = parse_signature_file(&read_text(&sidecar)?);
            for f in abi.iter_mut() {
                if let Some((_, sel)) = sigs.iter().find(|(s, _)| *s == f.signature()) {
                    if f.selector != Some(*sel) {
                        log::warn!("selector sidecar overrides computed selector for {}", f.signature());
                    }
                    f.selector = Some(*sel);
                }
            }
        }
        let name = runtime_path
            .file_name()
            .and_then(|n| n.to_str())
            .map(|n| n.split('.').next().unwrap_or(n).to_string())
            .unwrap_or_else(|| "contract".to_string());
        Self::new(name, runtime, deploy, abi)
    }

    /// Loads `<dir>/<name>.bin-runtime`, `<name>.abi` and, when present, `<name>.bin`.
    pub fn load_named(dir: &Path, name: &str) -> Result<Self, EvmError> {
        let runtime = dir.join(format!("{name}.bin-runtime"));
        let abi = dir.join(format!("{name}.abi"));
        let deploy = dir.join(format!("{name}.bin"));
        let deploy: Option<PathBuf> = deploy.exists().then_some(deploy);
        Self::load(&runtime, &abi, deploy.as_deref())
    }

    pub fn constructor(&self) -> Option<&FunctionAbi> {
        self.abi.iter().find(|f| f.is_constructor)
    }

    pub fn fallback(&self) -> Option<&FunctionAbi> {
        self.abi.iter().find(|f| f.is_fallback)
    }

    /// Externally callable entries (functions and the fallback).
    pub fn functions(&self) -> impl Iterator<Item = &FunctionAbi> {
        self.abi.iter().filter(|f| !f.is_constructor)
    }

    pub fn function_by_selector(&self, selector: [u8; 4]) -> Option<&FunctionAbi> {
        self.abi.iter().find(|f| f.selector == Some(selector))
    }
}

fn read_text(path: &Path) -> Result<String, EvmError> {
    std::fs::read_to_string(path).map_err(|e| EvmError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn read_hex(path: &Path) -> Result<Vec<u8>, EvmError> {
    let text = read_text(path)?;
    hex_decode(&text).ok_or_else(|| EvmError::BadHex(path.display().to_string()))
}

/// Deploy code that copies `runtime` into memory and returns it.
pub fn deploy_wrapper(runtime: &[u8]) -> Result<Vec<u8>, EvmError> {
    let mut asm = Assembler::new();
    asm.push_n(2, runtime.len() as u64)
        .op(DUP1)
        .push_label("runtime")
        .push(0u64)
        .op(CODECOPY)
        .push(0u64)
        .op(RETURN)
        .op(INVALID)
        .mark("runtime")
        .data(runtime);
    asm.assemble()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapper_embeds_runtime() {
        let runtime = vec![0x60, 0x01, 0x00];
        let deploy = deploy_wrapper(&runtime).unwrap();
        assert!(deploy.ends_with(&runtime));
    }
}
