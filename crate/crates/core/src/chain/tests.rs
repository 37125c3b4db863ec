use serde_json::json;

use super::*;
use crate::evm::asm::assemble;

fn alice() -> Address {
    Address::derived("alice")
}

fn chain() -> ChainState {
    ChainState::with_accounts([(alice(), U256::from(1_000_000u64))])
}

/// Installs `src` as runtime code and calls it with no data.
fn run_code(src: &str) -> (ChainState, Address, ExecutionTrace) {
    let mut s = chain();
    let target = Address::derived("target");
    s.accounts.entry(target).or_default().code = std::sync::Arc::new(Code::new(assemble(src).unwrap()));
    let t = s.call(target, &[], U256::zero(), alice(), None).unwrap();
    (s, target, t)
}

#[test]
fn slt_treats_all_ones_as_minus_one() {
    // SLT(a=-1, b=0) stored at slot 0.
    let (s, target, t) = run_code("PUSH1 0 PUSH32 0xffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff SLT PUSH1 0 SSTORE STOP");
    assert!(t.succeeded());
    assert_eq!(s.storage(target, U256::zero()), U256::one());
}

#[test]
fn gt_records_operands_top_first() {
    let (s, target, t) = run_code("PUSH1 5 PUSH1 3 GT PUSH1 1 SSTORE STOP");
    assert_eq!(s.storage(target, U256::one()), U256::zero());
    assert_eq!(t.predicate_observations.len(), 1);
    let o = t.predicate_observations[0];
    assert_eq!((o.comparison_offset, o.a, o.b), (4, U256::from(3), U256::from(5)));
    assert_eq!(t.executed_offsets[o.step], 4);
}

#[test]
fn jump_to_non_jumpdest_reverts() {
    let (_, _, t) = run_code("PUSH1 3 JUMP STOP STOP");
    assert_eq!(t.status, TraceStatus::Reverted);
    assert_eq!(t.halt, Some(Halt::BadJumpDestination));
}

#[test]
fn revert_rolls_back_storage_and_value() {
    let (mut s, target, _) = run_code("STOP");
    s.accounts.get_mut(&target).unwrap().code =
        std::sync::Arc::new(Code::new(assemble("PUSH1 7 PUSH1 0 SSTORE PUSH1 0 DUP1 REVERT").unwrap()));
    let before = s.clone();
    let t = s.call(target, &[], U256::from(10), alice(), None).unwrap();
    assert_eq!(t.status, TraceStatus::Reverted);
    assert_eq!(s.accounts, before.accounts);
    assert_eq!(t.executed_offsets.len(), 6);
}

#[test]
fn out_of_gas_on_infinite_loop() {
    let (_, _, t) = run_code("l: PUSH :l JUMP");
    assert_eq!(t.status, TraceStatus::OutOfGas);
    assert_eq!(t.gas_used, DEFAULT_GAS_BUDGET);
}

#[test]
fn block_gas_limit_caps_budget() {
    let mut s = chain();
    s.block_gas_limit = 100;
    let target = Address::derived("loop");
    s.accounts.entry(target).or_default().code = std::sync::Arc::new(Code::new(assemble("l: PUSH :l JUMP").unwrap()));
    let t = s.call(target, &[], U256::zero(), alice(), None).unwrap();
    assert_eq!((t.status, t.gas_used), (TraceStatus::OutOfGas, 100));
}

#[test]
fn deploy_installs_runtime_and_credits_value() {
    let mut s = chain();
    let runtime = assemble("PUSH1 1 PUSH1 0 SSTORE STOP").unwrap();
    let deploy = crate::evm::artifact::deploy_wrapper(&runtime).unwrap();
    let (addr, t) = s.deploy(&deploy, &[], U256::from(5), alice(), None).unwrap();
    assert!(t.succeeded());
    assert_eq!(s.account(addr).unwrap().code.bytes(), &runtime[..]);
    assert_eq!(s.balance(addr), U256::from(5));
    assert_eq!(s.balance(alice()), U256::from(1_000_000u64 - 5));
    assert_eq!(addr, state::create_address(alice(), 0));
}

#[test]
fn deploy_with_excess_value_is_a_precondition_error() {
    let mut s = chain();
    let err = s.deploy(&[0x00], &[], U256::from(2_000_000u64), alice(), None).unwrap_err();
    assert!(matches!(err, ChainError::InsufficientBalance { .. }));
}

#[test]
fn reverting_constructor_creates_nothing() {
    let mut s = chain();
    let before = s.accounts.clone();
    let code = assemble("PUSH1 0 DUP1 REVERT").unwrap();
    let err = s.deploy(&code, &[], U256::zero(), alice(), None).unwrap_err();
    assert_eq!(err, ChainError::DeployReverted { status: TraceStatus::Reverted });
    assert_eq!(s.accounts, before);
}

#[test]
fn clock_advances() {
    let mut s = chain();
    assert_eq!(s.pass_blocks(0), Err(ChainError::NonPositiveAdvance));
    assert_eq!(s.pass_time(0), Err(ChainError::NonPositiveAdvance));
    s.pass_time(10).unwrap();
    let t1 = s.timestamp;
    s.pass_time(1).unwrap();
    assert!(s.timestamp > t1);
    s.pass_blocks(3).unwrap();
    assert_eq!(s.block_number, GENESIS_BLOCK + 3);
}

#[test]
fn call_to_missing_account_is_vacuous() {
    let mut s = chain();
    let nobody = Address::derived("nobody");
    let t = s.call(nobody, &[1, 2, 3, 4], U256::from(9), alice(), None).unwrap();
    assert!(t.succeeded());
    assert!(t.executed_offsets.is_empty());
    assert_eq!(s.balance(nobody), U256::from(9));
}

#[test]
fn contract_call_runs_callee_one_level() {
    let mut s = chain();
    let callee = Address::derived("callee");
    let caller = Address::derived("caller");
    s.accounts.entry(callee).or_default().code =
        std::sync::Arc::new(Code::new(assemble("PUSH1 1 PUSH1 0 SSTORE STOP").unwrap()));
    let src = format!(
        "PUSH1 0 DUP1 DUP1 DUP1 PUSH1 0 PUSH20 {} GAS CALL PUSH1 0 SSTORE STOP",
        callee
    );
    s.accounts.entry(caller).or_default().code = std::sync::Arc::new(Code::new(assemble(&src).unwrap()));
    let t = s.call(caller, &[], U256::zero(), alice(), None).unwrap();
    assert!(t.succeeded());
    assert_eq!(s.storage(callee, U256::zero()), U256::one());
    assert_eq!(s.storage(caller, U256::zero()), U256::one());
}

#[test]
fn selfdestruct_moves_balance() {
    let mut s = chain();
    let c = Address::derived("doomed");
    let acct = s.accounts.entry(c).or_default();
    acct.balance = U256::from(50);
    acct.code = std::sync::Arc::new(Code::new(assemble("CALLER SELFDESTRUCT").unwrap()));
    let total = s.total_balance();
    s.call(c, &[], U256::zero(), alice(), None).unwrap();
    assert_eq!(s.balance(c), U256::zero());
    assert!(!s.has_code(c));
    assert_eq!(s.total_balance(), total);
}

#[test]
fn struct_logs_match_embedded_operand_order() {
    let code = "PUSH1 5 PUSH1 3 GT POP STOP";
    let (_, _, embedded) = run_code(code);
    let logs = json!({
        "failed": false,
        "gas": 5,
        "returnValue": "",
        "structLogs": [
            {"pc": 0, "op": "PUSH1", "depth": 1, "stack": []},
            {"pc": 2, "op": "PUSH1", "depth": 1, "stack": ["0x5"]},
            {"pc": 4, "op": "GT", "depth": 1, "stack": ["0x5", "0x3"]},
            {"pc": 5, "op": "POP", "depth": 1, "stack": ["0x0"]},
            {"pc": 6, "op": "STOP", "depth": 1, "stack": []}
        ]
    });
    let remote = trace_from_struct_logs(&logs).unwrap();
    assert_eq!(remote.predicate_observations, embedded.predicate_observations);
    assert_eq!(remote.executed_offsets, embedded.executed_offsets);
    assert_eq!(remote.status, TraceStatus::Success);
}

#[test]
fn struct_logs_at_pc_10() {
    let logs = json!({"failed": false, "structLogs": [
        {"pc": 10, "op": "GT", "depth": 1, "stack": ["0x1", "0x5", "0x3"]}
    ]});
    let t = trace_from_struct_logs(&logs).unwrap();
    let o = t.predicate_observations[0];
    assert_eq!((o.comparison_offset, o.a, o.b), (10, U256::from(3), U256::from(5)));
}

#[test]
fn struct_logs_skip_nested_frames_and_flag_gas() {
    let logs = json!({"failed": true, "structLogs": [
        {"pc": 0, "op": "PUSH1", "depth": 1, "stack": []},
        {"pc": 0, "op": "PUSH1", "depth": 2, "stack": []},
        {"pc": 2, "op": "JUMP", "depth": 1, "stack": ["0x0"], "error": "out of gas"}
    ]});
    let t = trace_from_struct_logs(&logs).unwrap();
    assert_eq!(t.executed_offsets, vec![0, 2]);
    assert_eq!(t.status, TraceStatus::OutOfGas);
}

#[test]
fn unreachable_node_is_provider_unavailable() {
    let p = RemoteProvider::new("http://127.0.0.1:9");
    let mut s = chain();
    let tx = Transaction {
        sender: alice(),
        to: None,
        value: U256::zero(),
        data: vec![0],
        gas_budget: None,
    };
    assert!(matches!(p.execute(&mut s, &tx), Err(ChainError::ProviderUnavailable(_))));
}

#[test]
fn identical_inputs_give_identical_traces() {
    let (s1, _, t1) = run_code("PUSH1 0 CALLDATALOAD PUSH1 2 LT PUSH1 0 SSTORE STOP");
    let (s2, _, t2) = run_code("PUSH1 0 CALLDATALOAD PUSH1 2 LT PUSH1 0 SSTORE STOP");
    assert_eq!(t1, t2);
    assert_eq!(s1, s2);
}
