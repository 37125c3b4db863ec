//! Bytecode and ABI front end: disassembly, selectors, constant scraping.

pub mod abi;
pub mod artifact;
pub mod asm;
pub mod disasm;
pub mod opcode;
pub mod scrape;
pub mod selector;

pub use abi::{encode_args, encode_call, parse_abi, AbiType, AbiValue, FunctionAbi, StateMutability};
pub use artifact::ContractArtifact;
pub use disasm::{disassemble, encode, Instruction};
pub use scrape::{scrape_constants, ConstantPools};
pub use selector::compute_selector;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvmError {
    #[error("empty bytecode")]
    EmptyBytecode,
    #[error("PUSH at offset {offset} needs {needed} payload bytes, only {available} remain")]
    TruncatedPush {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("malformed ABI{}: {reason}", index.map(|i| format!(" entry {i}")).unwrap_or_default())]
    MalformedAbi { index: Option<usize>, reason: String },
    #[error("ABI encoding: {0}")]
    Encoding(String),
    #[error("assembly: {0}")]
    Assembly(String),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{0} is not valid hex")]
    BadHex(String),
}
