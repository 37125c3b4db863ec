//! Test cases (a deployment followed by transactions and clock advances),
//! random generation with constant seeding, and the variation operators.

mod config;
mod generate;
mod ops;

use crate::evm::{AbiType, AbiValue, ContractArtifact, FunctionAbi};
use crate::{Address, U256};

pub use config::{parse_accounts, parse_u256, ConfigError, GenConfig, Wei};
pub use generate::{uniform_u256, Generator, TestgenError};
pub use ops::{crossover, crossover_at, mutate};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Statement {
    Constructor {
        args: Vec<AbiValue>,
        value: U256,
        sender: Address,
    },
    FunctionCall {
        /// Index into the artifact's ABI.
        function: usize,
        args: Vec<AbiValue>,
        value: U256,
        sender: Address,
    },
    PassBlocks {
        n: u64,
    },
    PassTime {
        seconds: u64,
    },
}

impl Statement {
    pub fn is_constructor(&self) -> bool {
        matches!(self, Statement::Constructor { .. })
    }

    pub fn value(&self) -> U256 {
        match self {
            Statement::Constructor { value, .. } | Statement::FunctionCall { value, .. } => *value,
            _ => U256::zero(),
        }
    }

    /// The ABI entry a call or deployment targets.
    pub fn abi<'a>(&self, artifact: &'a ContractArtifact) -> Option<&'a FunctionAbi> {
        match self {
            Statement::Constructor { .. } => artifact.constructor(),
            Statement::FunctionCall { function, .. } => artifact.abi.get(*function),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TestCase {
    pub statements: Vec<Statement>,
}

impl TestCase {
    pub fn new(statements: Vec<Statement>) -> Self {
        TestCase { statements }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Checks the structural invariants, returning the first violation.
    pub fn check(&self, artifact: &ContractArtifact, config: &GenConfig) -> Result<(), String> {
        let n = self.len();
        if n < 2 || n > config.max_statements {
            return Err(format!("length {n} outside [2, {}]", config.max_statements));
        }
        for (i, s) in self.statements.iter().enumerate() {
            if s.is_constructor() != (i == 0) {
                return Err(format!("statement {i}: constructor must appear first and only once"));
            }
            let (args, value) = match s {
                Statement::Constructor { args, value, .. } | Statement::FunctionCall { args, value, .. } => {
                    (args, *value)
                }
                _ => continue,
            };
            let inputs: &[AbiType] = match (s, s.abi(artifact)) {
                (_, Some(f)) => &f.inputs,
                (Statement::Constructor { .. }, None) => &[],
                _ => return Err(format!("statement {i}: unknown function")),
            };
            let payable = s.abi(artifact).is_some_and(|f| f.payable);
            if !payable && !value.is_zero() {
                return Err(format!("statement {i}: value sent to a non-payable function"));
            }
            if inputs.len() != args.len() || !inputs.iter().zip(args).all(|(t, v)| value_matches(t, v)) {
                return Err(format!("statement {i}: arguments do not match the ABI"));
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, artifact: &ContractArtifact, config: &GenConfig) -> bool {
        self.check(artifact, config).is_ok()
    }
}

fn low_mask(bits: u16) -> U256 {
    if bits >= 256 {
        U256::MAX
    } else {
        (U256::one() << bits as usize) - 1
    }
}

/// Sign-extends the low `bits` of `v` to a full word.
pub(crate) fn sign_extend(v: U256, bits: u16) -> U256 {
    if bits >= 256 {
        return v;
    }
    let low = v & low_mask(bits);
    if low.bit(bits as usize - 1) {
        low | !low_mask(bits)
    } else {
        low
    }
}

/// Whether `value` is a well-formed instance of `ty`.
pub fn value_matches(ty: &AbiType, value: &AbiValue) -> bool {
    match (ty, value) {
        (AbiType::Uint(bits), AbiValue::Uint(v)) => *v <= low_mask(*bits),
        (AbiType::Int(bits), AbiValue::Int(v)) => sign_extend(*v, *bits) == *v,
        (AbiType::Bool, AbiValue::Bool(_)) | (AbiType::Address, AbiValue::Address(_)) => true,
        (AbiType::FixedBytes(n), AbiValue::FixedBytes(b)) => b.len() == *n as usize,
        (AbiType::Bytes, AbiValue::Bytes(_)) | (AbiType::String, AbiValue::String(_)) => true,
        (AbiType::Array(inner, len), AbiValue::Array(items)) => {
            len.is_none_or(|n| n == items.len()) && items.iter().all(|v| value_matches(inner, v))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests;
