use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::cdg::Cdg;
use crate::chain::{ChainError, ChainState, ExecutionTrace, TraceProvider, TraceStatus, Transaction};
use crate::evm::{encode_args, encode_call, ContractArtifact};
use crate::fitness::{EvalAccumulator, Evaluation};
use crate::testgen::{GenConfig, Statement, TestCase};
use crate::{Address, U256};

use super::SearchError;

/// Funded genesis state described by the config.
pub fn genesis_state(config: &GenConfig) -> ChainState {
    let mut state = ChainState::with_accounts(
        config.accounts.iter().enumerate().map(|(i, a)| (*a, config.balance_of(i))),
    );
    state.gas_budget = config.gas_budget;
    state.block_gas_limit = config.block_gas_limit;
    state
}

/// Per-statement outcome of one test-case execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatementOutcome {
    Executed(ExecutionTrace),
    /// The sender could not fund the transaction; nothing ran.
    Unfunded,
    /// A call issued after the deployment failed; nothing ran.
    NoContract,
    Clock,
}

#[derive(Debug, Clone)]
pub struct CaseRun {
    pub evaluation: Evaluation,
    pub outcomes: Vec<StatementOutcome>,
    pub contract: Option<Address>,
    pub chain_time: Duration,
}

impl CaseRun {
    pub fn statuses(&self) -> impl Iterator<Item = (usize, TraceStatus)> + '_ {
        self.outcomes.iter().enumerate().filter_map(|(i, o)| match o {
            StatementOutcome::Executed(t) => Some((i, t.status)),
            _ => None,
        })
    }
}

/// Runs test cases against isolated copies of a base chain.
pub struct Executor<'a> {
    pub artifact: &'a ContractArtifact,
    pub cdg: &'a Cdg,
    pub provider: &'a dyn TraceProvider,
    pub base: ChainState,
}

impl<'a> Executor<'a> {
    pub fn new(artifact: &'a ContractArtifact, cdg: &'a Cdg, config: &GenConfig, provider: &'a dyn TraceProvider) -> Self {
        Executor {
            artifact,
            cdg,
            provider,
            base: genesis_state(config),
        }
    }

    pub fn run(&self, case: &TestCase) -> Result<CaseRun, SearchError> {
        let mark = self.provider.checkpoint().map_err(SearchError::Chain)?;
        let result = self.run_inner(case);
        self.provider.restore(mark).map_err(SearchError::Chain)?;
        result
    }

    fn run_inner(&self, case: &TestCase) -> Result<CaseRun, SearchError> {
        let mut state = self.base.clone();
        let mut acc = EvalAccumulator::new(self.cdg);
        let mut outcomes = Vec::with_capacity(case.len());
        let mut contract = None;
        let mut chain_time = Duration::ZERO;
        let provider = self.provider;
        for s in &case.statements {
            let outcome = match s {
                Statement::Constructor { args, value, sender } => {
                    let inputs = self.artifact.constructor().map(|f| f.inputs.clone()).unwrap_or_default();
                    let mut data = self.artifact.deploy_bytecode.clone();
                    data.extend(encode_args(&inputs, args)?);
                    let tx = tx(*sender, None, *value, data);
                    match funded(timed(&mut chain_time, || provider.execute(&mut state, &tx)))? {
                        Some(trace) => {
                            contract = trace.receipt.created_address;
                            StatementOutcome::Executed(trace)
                        }
                        None => StatementOutcome::Unfunded,
                    }
                }
                Statement::FunctionCall { function, args, value, sender } => match contract {
                    None => StatementOutcome::NoContract,
                    Some(to) => {
                        let data = encode_call(&self.artifact.abi[*function], args)?;
                        let tx = tx(*sender, Some(to), *value, data);
                        match funded(timed(&mut chain_time, || provider.execute(&mut state, &tx)))? {
                            Some(trace) => {
                                acc.absorb(&trace)?;
                                StatementOutcome::Executed(trace)
                            }
                            None => StatementOutcome::Unfunded,
                        }
                    }
                },
                Statement::PassBlocks { n } => {
                    timed(&mut chain_time, || provider.pass_blocks(&mut state, *n))?;
                    StatementOutcome::Clock
                }
                Statement::PassTime { seconds } => {
                    timed(&mut chain_time, || provider.pass_time(&mut state, *seconds))?;
                    StatementOutcome::Clock
                }
            };
            outcomes.push(outcome);
        }
        Ok(CaseRun {
            evaluation: acc.finish(),
            outcomes,
            contract,
            chain_time,
        })
    }

    /// Out-of-gas counts per called function name.
    pub fn out_of_gas(&self, case: &TestCase, run: &CaseRun, into: &mut BTreeMap<String, usize>) {
        for (i, status) in run.statuses() {
            if status == TraceStatus::OutOfGas {
                let name = match case.statements[i].abi(self.artifact) {
                    Some(f) if f.is_constructor => "constructor".to_string(),
                    Some(f) if f.is_fallback => "fallback".to_string(),
                    Some(f) => f.name.clone(),
                    None => "constructor".to_string(),
                };
                *into.entry(name).or_default() += 1;
            }
        }
    }
}

fn timed<T>(total: &mut Duration, f: impl FnOnce() -> T) -> T {
    let t0 = Instant::now();
    let r = f();
    *total += t0.elapsed();
    r
}

fn tx(sender: Address, to: Option<Address>, value: U256, data: Vec<u8>) -> Transaction {
    Transaction {
        sender,
        to,
        value,
        data,
        gas_budget: None,
    }
}

/// Maps an unfunded sender to `None`; every other chain error propagates.
fn funded(r: Result<ExecutionTrace, ChainError>) -> Result<Option<ExecutionTrace>, SearchError> {
    match r {
        Ok(t) => Ok(Some(t)),
        Err(ChainError::InsufficientBalance { .. }) => Ok(None),
        Err(e) => Err(SearchError::Chain(e)),
    }
}
