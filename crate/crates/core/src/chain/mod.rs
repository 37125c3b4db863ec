//! Deterministic embedded chain: accounts, clock, an EVM-subset interpreter,
//! and the trace-provider seam that lets an external node stand in for it.

mod interp;
mod remote;
mod state;

use serde::Serialize;

use crate::{Address, U256};

pub use remote::{trace_from_struct_logs, RemoteProvider, RPC_URL_ENV};
pub use state::{Account, ChainState, Code, DEFAULT_GAS_BUDGET, GENESIS_BLOCK, GENESIS_TIMESTAMP};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub sender: Address,
    /// `None` creates a contract from `data`.
    pub to: Option<Address>,
    pub value: U256,
    pub data: Vec<u8>,
    /// Instruction-count cap; the chain default applies when absent.
    pub gas_budget: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceStatus {
    Success,
    Reverted,
    OutOfGas,
    InvalidOp,
}

/// Why execution stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Halt {
    Revert,
    BadJumpDestination,
    StackUnderflow,
    StackOverflow,
    InvalidOpcode(u8),
    OutOfGas,
}

impl Halt {
    pub fn status(self) -> TraceStatus {
        match self {
            Halt::Revert | Halt::BadJumpDestination => TraceStatus::Reverted,
            Halt::OutOfGas => TraceStatus::OutOfGas,
            Halt::StackUnderflow | Halt::StackOverflow | Halt::InvalidOpcode(_) => TraceStatus::InvalidOp,
        }
    }
}

/// Operands of a comparison as they were on the stack: `a` on top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PredicateObservation {
    pub comparison_offset: usize,
    pub a: U256,
    pub b: U256,
    /// Index into `executed_offsets` of the comparison.
    pub step: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Receipt {
    pub created_address: Option<Address>,
    pub tx_id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionTrace {
    pub executed_offsets: Vec<u32>,
    pub predicate_observations: Vec<PredicateObservation>,
    pub status: TraceStatus,
    pub halt: Option<Halt>,
    pub return_data: Vec<u8>,
    pub receipt: Receipt,
    pub gas_used: u64,
}

impl ExecutionTrace {
    pub fn empty(status: TraceStatus, tx_id: u64) -> Self {
        ExecutionTrace {
            executed_offsets: Vec::new(),
            predicate_observations: Vec::new(),
            status,
            halt: None,
            return_data: Vec::new(),
            receipt: Receipt {
                created_address: None,
                tx_id,
            },
            gas_used: 0,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.status == TraceStatus::Success
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("sender {sender} has {available} wei, transaction needs {needed}")]
    InsufficientBalance {
        sender: Address,
        needed: U256,
        available: U256,
    },
    #[error("chain clock advances must be positive")]
    NonPositiveAdvance,
    #[error("constructor did not complete ({status:?})")]
    DeployReverted { status: TraceStatus },
    #[error("trace provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("trace provider returned an unexpected response: {0}")]
    BadResponse(String),
}

/// An execution backend producing traces for transactions.
pub trait TraceProvider: Send + Sync {
    fn execute(&self, state: &mut ChainState, tx: &Transaction) -> Result<ExecutionTrace, ChainError>;

    fn pass_blocks(&self, state: &mut ChainState, n: u64) -> Result<(), ChainError> {
        state.pass_blocks(n)
    }

    fn pass_time(&self, state: &mut ChainState, seconds: u64) -> Result<(), ChainError> {
        state.pass_time(seconds)
    }

    /// Marks the chain before a test case runs. Providers whose state lives
    /// in `ChainState` need nothing, since each test runs on a fresh clone.
    fn checkpoint(&self) -> Result<Option<String>, ChainError> {
        Ok(None)
    }

    /// Rolls back to a mark returned by [`TraceProvider::checkpoint`].
    fn restore(&self, _mark: Option<String>) -> Result<(), ChainError> {
        Ok(())
    }

    /// Whether independent test cases may execute concurrently.
    fn parallel_safe(&self) -> bool {
        true
    }
}

/// The in-process interpreter.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmbeddedProvider;

impl TraceProvider for EmbeddedProvider {
    fn execute(&self, state: &mut ChainState, tx: &Transaction) -> Result<ExecutionTrace, ChainError> {
        state.execute(tx)
    }
}

#[cfg(test)]
mod tests;
