use std::collections::BTreeMap;
use std::sync::Arc;

use super::interp::{self, Env, Frame, Recorder};
use super::{ChainError, ExecutionTrace, Receipt, TraceStatus, Transaction};
use crate::evm::opcode::{self, JUMPDEST};
use crate::{keccak256, Address, U256, U512};

pub const GENESIS_BLOCK: u64 = 1;
pub const GENESIS_TIMESTAMP: u64 = 1_600_000_000;
pub const DEFAULT_GAS_BUDGET: u64 = 2_000_000;

/// Contract code with its valid jump destinations precomputed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Code {
    bytes: Vec<u8>,
    jumpdests: Vec<bool>,
}

impl Code {
    pub fn new(bytes: Vec<u8>) -> Self {
        let mut jumpdests = vec![false; bytes.len()];
        let mut pc = 0;
        while pc < bytes.len() {
            let op = bytes[pc];
            if op == JUMPDEST {
                jumpdests[pc] = true;
            }
            pc += 1 + opcode::push_len(op);
        }
        Code { bytes, jumpdests }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn is_jumpdest(&self, pc: usize) -> bool {
        self.jumpdests.get(pc).copied().unwrap_or(false)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Account {
    pub balance: U256,
    pub code: Arc<Code>,
    pub storage: BTreeMap<U256, U256>,
    pub nonce: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    pub accounts: BTreeMap<Address, Account>,
    pub block_number: u64,
    pub timestamp: u64,
    pub block_gas_limit: u64,
    /// Per-transaction instruction budget when the transaction sets none.
    pub gas_budget: u64,
    pub coinbase: Address,
    pub blockhash_seed: u64,
    pub tx_count: u64,
}

impl Default for ChainState {
    fn default() -> Self {
        ChainState {
            accounts: BTreeMap::new(),
            block_number: GENESIS_BLOCK,
            timestamp: GENESIS_TIMESTAMP,
            block_gas_limit: u64::MAX,
            gas_budget: DEFAULT_GAS_BUDGET,
            coinbase: Address::derived("coinbase"),
            blockhash_seed: 0,
            tx_count: 0,
        }
    }
}

/// Address of the contract created by `deployer` at `nonce`.
pub fn create_address(deployer: Address, nonce: u64) -> Address {
    let mut buf = [0u8; 28];
    buf[..20].copy_from_slice(&deployer.0);
    buf[20..].copy_from_slice(&nonce.to_be_bytes());
    let h = keccak256(&buf);
    let mut out = [0u8; 20];
    out.copy_from_slice(&h[12..]);
    Address(out)
}

impl ChainState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_accounts(accounts: impl IntoIterator<Item = (Address, U256)>) -> Self {
        let mut s = Self::default();
        for (a, b) in accounts {
            s.add_account(a, b);
        }
        s
    }

    pub fn add_account(&mut self, address: Address, balance: U256) {
        self.accounts.entry(address).or_default().balance = balance;
    }

    pub fn account(&self, address: Address) -> Option<&Account> {
        self.accounts.get(&address)
    }

    pub fn balance(&self, address: Address) -> U256 {
        self.accounts.get(&address).map(|a| a.balance).unwrap_or_default()
    }

    pub fn storage(&self, address: Address, key: U256) -> U256 {
        self.accounts
            .get(&address)
            .and_then(|a| a.storage.get(&key).copied())
            .unwrap_or_default()
    }

    pub fn nonce(&self, address: Address) -> u64 {
        self.accounts.get(&address).map(|a| a.nonce).unwrap_or(0)
    }

    pub fn has_code(&self, address: Address) -> bool {
        self.accounts.get(&address).is_some_and(|a| !a.code.is_empty())
    }

    /// Sum of all balances (cannot overflow 512 bits).
    pub fn total_balance(&self) -> U512 {
        self.accounts.values().fold(U512::zero(), |acc, a| acc + U512::from(a.balance))
    }

    pub fn pass_blocks(&mut self, n: u64) -> Result<(), ChainError> {
        if n == 0 {
            return Err(ChainError::NonPositiveAdvance);
        }
        self.block_number = self.block_number.saturating_add(n);
        Ok(())
    }

    pub fn pass_time(&mut self, seconds: u64) -> Result<(), ChainError> {
        if seconds == 0 {
            return Err(ChainError::NonPositiveAdvance);
        }
        self.timestamp = self.timestamp.saturating_add(seconds);
        Ok(())
    }

    /// Runs a transaction. Reverts and exceptional halts are reported in the
    /// trace status and leave the state untouched; only precondition
    /// violations are errors.
    pub fn execute(&mut self, tx: &Transaction) -> Result<ExecutionTrace, ChainError> {
        let available = self.balance(tx.sender);
        if tx.value > available {
            return Err(ChainError::InsufficientBalance {
                sender: tx.sender,
                needed: tx.value,
                available,
            });
        }
        let tx_id = self.tx_count;
        self.tx_count += 1;
        let mut gas = tx.gas_budget.unwrap_or(self.gas_budget).min(self.block_gas_limit);
        let gas_start = gas;
        let env = Env {
            origin: tx.sender,
            block_number: self.block_number,
            timestamp: self.timestamp,
            gas_limit: self.block_gas_limit.min(u64::MAX / 2),
            coinbase: self.coinbase,
            blockhash_seed: self.blockhash_seed,
        };

        let mut work = self.accounts.clone();
        let sender = work.entry(tx.sender).or_default();
        let nonce = sender.nonce;
        sender.nonce += 1;

        let (code, address) = match tx.to {
            None => {
                let address = create_address(tx.sender, nonce);
                work.entry(address).or_default();
                (Arc::new(Code::new(tx.data.clone())), address)
            }
            Some(to) => {
                let code = work.get(&to).map(|a| a.code.clone()).unwrap_or_default();
                if code.is_empty() {
                    interp::transfer(&mut work, tx.sender, to, tx.value);
                    self.accounts = work;
                    return Ok(ExecutionTrace::empty(TraceStatus::Success, tx_id));
                }
                (code, to)
            }
        };
        interp::transfer(&mut work, tx.sender, address, tx.value);

        let calldata: &[u8] = if tx.to.is_some() { &tx.data } else { &[] };
        let mut rec = Recorder::default();
        let frame = Frame {
            code: &code,
            address,
            caller: tx.sender,
            value: tx.value,
            calldata,
        };
        let out = interp::run(&mut work, &env, &frame, 0, &mut gas, Some(&mut rec));
        let status = out.halt.map(|h| h.status()).unwrap_or(TraceStatus::Success);
        let mut receipt = Receipt {
            created_address: None,
            tx_id,
        };
        if status == TraceStatus::Success {
            if tx.to.is_none() {
                work.get_mut(&address).expect("created above").code = Arc::new(Code::new(out.output.clone()));
                receipt.created_address = Some(address);
            }
            self.accounts = work;
        }
        Ok(ExecutionTrace {
            executed_offsets: rec.offsets,
            predicate_observations: rec.observations,
            status,
            halt: out.halt,
            return_data: out.output,
            receipt,
            gas_used: gas_start - gas,
        })
    }

    /// Creates a contract from deploy code followed by encoded constructor
    /// arguments.
    pub fn deploy(
        &mut self,
        deploy_bytecode: &[u8],
        encoded_args: &[u8],
        value: U256,
        sender: Address,
        gas: Option<u64>,
    ) -> Result<(Address, ExecutionTrace), ChainError> {
        let mut data = deploy_bytecode.to_vec();
        data.extend_from_slice(encoded_args);
        let trace = self.execute(&Transaction {
            sender,
            to: None,
            value,
            data,
            gas_budget: gas,
        })?;
        match trace.receipt.created_address {
            Some(a) => Ok((a, trace)),
            None => Err(ChainError::DeployReverted { status: trace.status }),
        }
    }

    pub fn call(
        &mut self,
        to: Address,
        calldata: &[u8],
        value: U256,
        sender: Address,
        gas: Option<u64>,
    ) -> Result<ExecutionTrace, ChainError> {
        self.execute(&Transaction {
            sender,
            to: Some(to),
            value,
            data: calldata.to_vec(),
            gas_budget: gas,
        })
    }
}
