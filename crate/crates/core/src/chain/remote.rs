//! Adapter that forwards transactions to an external development node over
//! JSON-RPC and converts its debug trace into an [`ExecutionTrace`].
//!
//! Stack order: `structLogs[i].stack` lists the stack bottom-to-top, so the
//! left operand of a comparison (the embedded interpreter's `a`) is the last
//! element and `b` the one before it.

use std::time::Duration;

use serde_json::{json, Value};

use super::{ChainError, ChainState, ExecutionTrace, PredicateObservation, Receipt, TraceProvider, TraceStatus, Transaction};
use crate::evm::opcode;
use crate::types::{hex_decode, hex_encode};
use crate::{Address, U256};

/// Environment variable naming the node endpoint.
pub const RPC_URL_ENV: &str = "EVMGEN_RPC_URL";

pub struct RemoteProvider {
    url: String,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(url: impl Into<String>) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(30)).build();
        RemoteProvider { url: url.into(), agent }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(RPC_URL_ENV).ok().map(Self::new)
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn rpc(&self, method: &str, params: Value) -> Result<Value, ChainError> {
        let body = json!({"jsonrpc": "2.0", "id": 1, "method": method, "params": params});
        let resp: Value = self
            .agent
            .post(&self.url)
            .send_json(body)
            .map_err(|e| ChainError::ProviderUnavailable(e.to_string()))?
            .into_json()
            .map_err(|e| ChainError::BadResponse(e.to_string()))?;
        if let Some(err) = resp.get("error") {
            return Err(ChainError::BadResponse(err.to_string()));
        }
        resp.get("result")
            .cloned()
            .ok_or_else(|| ChainError::BadResponse(format!("{method}: missing result")))
    }

    /// Node-side snapshot id, restorable with [`RemoteProvider::revert`].
    pub fn snapshot(&self) -> Result<Value, ChainError> {
        self.rpc("evm_snapshot", json!([]))
    }

    pub fn revert(&self, id: &Value) -> Result<(), ChainError> {
        self.rpc("evm_revert", json!([id])).map(|_| ())
    }
}

fn quantity(v: U256) -> String {
    format!("{v:#x}")
}

impl TraceProvider for RemoteProvider {
    fn execute(&self, state: &mut ChainState, tx: &Transaction) -> Result<ExecutionTrace, ChainError> {
        let mut params = json!({
            "from": tx.sender.to_string(),
            "value": quantity(tx.value),
            "data": hex_encode(&tx.data),
            "gas": format!("{:#x}", tx.gas_budget.unwrap_or(state.gas_budget)),
        });
        if let Some(to) = tx.to {
            params["to"] = json!(to.to_string());
        }
        let hash = self.rpc("eth_sendTransaction", json!([params]))?;
        let receipt = self.rpc("eth_getTransactionReceipt", json!([hash]))?;
        let logs = self.rpc("debug_traceTransaction", json!([hash, {"disableStorage": true}]))?;
        let mut trace = trace_from_struct_logs(&logs)?;
        trace.receipt.tx_id = state.tx_count;
        state.tx_count += 1;
        trace.receipt.created_address = receipt
            .get("contractAddress")
            .and_then(Value::as_str)
            .and_then(|s| s.parse::<Address>().ok());
        Ok(trace)
    }

    fn pass_blocks(&self, state: &mut ChainState, n: u64) -> Result<(), ChainError> {
        state.pass_blocks(n)?;
        for _ in 0..n {
            self.rpc("evm_mine", json!([]))?;
        }
        Ok(())
    }

    fn pass_time(&self, state: &mut ChainState, seconds: u64) -> Result<(), ChainError> {
        state.pass_time(seconds)?;
        self.rpc("evm_increaseTime", json!([seconds]))?;
        self.rpc("evm_mine", json!([])).map(|_| ())
    }

    fn checkpoint(&self) -> Result<Option<String>, ChainError> {
        Ok(Some(self.snapshot()?.to_string()))
    }

    fn restore(&self, mark: Option<String>) -> Result<(), ChainError> {
        match mark {
            Some(m) => {
                let id: Value = serde_json::from_str(&m).map_err(|e| ChainError::BadResponse(e.to_string()))?;
                self.revert(&id)
            }
            None => Ok(()),
        }
    }

    fn parallel_safe(&self) -> bool {
        false
    }
}

fn parse_word(v: &Value) -> Result<U256, ChainError> {
    let s = v
        .as_str()
        .ok_or_else(|| ChainError::BadResponse(format!("stack entry {v} is not a string")))?;
    let digits = s.strip_prefix("0x").unwrap_or(s);
    U256::from_str_radix(if digits.is_empty() { "0" } else { digits }, 16)
        .map_err(|_| ChainError::BadResponse(format!("bad stack word {s}")))
}

/// Converts a `debug_traceTransaction` result. Only top-frame entries
/// (depth 1, or no depth field) are kept, since offsets of nested frames
/// refer to other code.
pub fn trace_from_struct_logs(result: &Value) -> Result<ExecutionTrace, ChainError> {
    let logs = result
        .get("structLogs")
        .and_then(Value::as_array)
        .ok_or_else(|| ChainError::BadResponse("missing structLogs".into()))?;
    let mut offsets = Vec::new();
    let mut observations = Vec::new();
    let mut out_of_gas = false;
    for entry in logs {
        if entry.get("depth").and_then(Value::as_u64).unwrap_or(1) != 1 {
            continue;
        }
        if entry
            .get("error")
            .and_then(|e| e.as_str().map(str::to_owned).or_else(|| e.get("message").and_then(Value::as_str).map(str::to_owned)))
            .is_some_and(|e| e.to_lowercase().contains("out of gas"))
        {
            out_of_gas = true;
        }
        let pc = entry
            .get("pc")
            .and_then(Value::as_u64)
            .ok_or_else(|| ChainError::BadResponse("structLog without pc".into()))? as usize;
        let op = entry.get("op").and_then(Value::as_str).unwrap_or("");
        let step = offsets.len();
        offsets.push(pc as u32);
        let code = opcode::from_mnemonic(op);
        if let Some(c @ (opcode::LT | opcode::GT | opcode::SLT | opcode::SGT | opcode::EQ | opcode::ISZERO)) = code {
            let stack = entry
                .get("stack")
                .and_then(Value::as_array)
                .ok_or_else(|| ChainError::BadResponse(format!("{op} at {pc} without stack")))?;
            let n = stack.len();
            let need = if c == opcode::ISZERO { 1 } else { 2 };
            if n < need {
                return Err(ChainError::BadResponse(format!("{op} at {pc}: stack too short")));
            }
            let a = parse_word(&stack[n - 1])?;
            let b = if c == opcode::ISZERO { U256::zero() } else { parse_word(&stack[n - 2])? };
            observations.push(PredicateObservation {
                comparison_offset: pc,
                a,
                b,
                step,
            });
        }
    }
    let failed = result.get("failed").and_then(Value::as_bool).unwrap_or(false);
    let status = match (failed, out_of_gas) {
        (_, true) => TraceStatus::OutOfGas,
        (true, false) => TraceStatus::Reverted,
        (false, false) => TraceStatus::Success,
    };
    let return_data = result
        .get("returnValue")
        .and_then(Value::as_str)
        .and_then(hex_decode)
        .unwrap_or_default();
    Ok(ExecutionTrace {
        executed_offsets: offsets,
        predicate_observations: observations,
        status,
        halt: None,
        return_data,
        receipt: Receipt::default(),
        gas_used: result.get("gas").and_then(Value::as_u64).unwrap_or(0),
    })
}
