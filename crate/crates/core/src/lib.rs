//! Search-based branch-coverage test generation for EVM contract bytecode.
//!
//! The pipeline runs in two phases. Initialization disassembles the runtime
//! code, recovers a control-flow graph, compacts it into a control-dependency
//! graph and trims compiler-generated structure (dispatcher, payable checks,
//! public getters, empty fallback). The search phase then evolves test cases
//! (a constructor call followed by transactions and clock advances) against
//! an embedded deterministic chain, scoring each test by approach level plus
//! normalized branch distance for every branch objective.

pub mod cdg;
pub mod cfg;
pub mod chain;
pub mod evm;
pub mod fitness;
pub mod report;
pub mod search;
pub mod testgen;
mod types;

pub use types::{keccak256, Address, ParseAddressError, U256, U512};

pub use cdg::{Branch, BranchId, Cdg, NodeId, NodeKind, Polarity};
pub use cfg::{Cfg, Predicate, PredicateKind};
pub use chain::{ChainState, ExecutionTrace, TraceProvider, TraceStatus};
pub use evm::{ContractArtifact, FunctionAbi, Instruction};
pub use fitness::{Archive, DistanceVector, Fitness, NormalizedDistance};
pub use search::{Algorithm, RunOutcome};
pub use testgen::{GenConfig, Statement, TestCase};
