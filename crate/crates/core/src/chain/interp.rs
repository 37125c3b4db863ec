//! The interpreter loop. Gas is one unit per instruction.

use std::collections::BTreeMap;

use super::state::{Account, Code};
use super::{Halt, PredicateObservation};
use crate::evm::opcode::*;
use crate::types::{is_negative, negate, SIGN_BIT};
use crate::{keccak256, Address, U256, U512};

const STACK_LIMIT: usize = 1024;
/// Memory growth past this point is treated as running out of gas.
pub(super) const MEMORY_LIMIT: usize = 1 << 22;

pub(super) type Accounts = BTreeMap<Address, Account>;

pub(super) struct Env {
    pub origin: Address,
    pub block_number: u64,
    pub timestamp: u64,
    pub gas_limit: u64,
    pub coinbase: Address,
    pub blockhash_seed: u64,
}

pub(super) struct Frame<'a> {
    pub code: &'a Code,
    pub address: Address,
    pub caller: Address,
    pub value: U256,
    pub calldata: &'a [u8],
}

#[derive(Default)]
pub(super) struct Recorder {
    pub offsets: Vec<u32>,
    pub observations: Vec<PredicateObservation>,
}

pub(super) struct Outcome {
    pub halt: Option<Halt>,
    pub output: Vec<u8>,
}

pub(super) fn transfer(accounts: &mut Accounts, from: Address, to: Address, value: U256) {
    if from == to {
        accounts.entry(to).or_default();
        return;
    }
    let src = accounts.entry(from).or_default();
    src.balance -= value;
    let dst = accounts.entry(to).or_default();
    dst.balance = dst.balance.saturating_add(value);
}

fn as_usize(v: U256) -> Option<usize> {
    (v <= U256::from(usize::MAX)).then(|| v.as_usize())
}

/// Validates and returns `offset..offset+size` within the memory limit.
fn mem_range(offset: U256, size: U256) -> Result<Option<(usize, usize)>, Halt> {
    if size.is_zero() {
        return Ok(None);
    }
    let limit = U256::from(MEMORY_LIMIT);
    if offset > limit || size > limit {
        return Err(Halt::OutOfGas);
    }
    let (o, s) = (offset.as_usize(), size.as_usize());
    if o + s > MEMORY_LIMIT {
        return Err(Halt::OutOfGas);
    }
    Ok(Some((o, o + s)))
}

fn expand(memory: &mut Vec<u8>, end: usize) {
    if memory.len() < end {
        memory.resize(end.div_ceil(32) * 32, 0);
    }
}

/// Copies `src[from..from+len]` into `dst`, zero-filling past the end of `src`.
fn copy_padded(dst: &mut [u8], src: &[u8], from: U256) {
    dst.fill(0);
    let Some(from) = as_usize(from) else { return };
    if from >= src.len() {
        return;
    }
    let n = dst.len().min(src.len() - from);
    dst[..n].copy_from_slice(&src[from..from + n]);
}

fn sdiv(a: U256, b: U256) -> U256 {
    if b.is_zero() {
        return U256::zero();
    }
    let (na, nb) = (is_negative(a), is_negative(b));
    let ua = if na { negate(a) } else { a };
    let ub = if nb { negate(b) } else { b };
    let q = ua / ub;
    if na != nb {
        negate(q)
    } else {
        q
    }
}

fn smod(a: U256, b: U256) -> U256 {
    if b.is_zero() {
        return U256::zero();
    }
    let na = is_negative(a);
    let ua = if na { negate(a) } else { a };
    let ub = if is_negative(b) { negate(b) } else { b };
    let r = ua % ub;
    if na {
        negate(r)
    } else {
        r
    }
}

fn sar(shift: U256, value: U256) -> U256 {
    let neg = is_negative(value);
    if shift >= U256::from(256) {
        return if neg { U256::MAX } else { U256::zero() };
    }
    let s = shift.as_usize();
    if neg {
        !((!value) >> s)
    } else {
        value >> s
    }
}

fn signextend(b: U256, x: U256) -> U256 {
    if b >= U256::from(31) {
        return x;
    }
    let bit = b.as_usize() * 8 + 7;
    let mask = (U256::one() << (bit + 1)) - 1;
    if x.bit(bit) {
        x | !mask
    } else {
        x & mask
    }
}

fn narrow(x: U512) -> U256 {
    U256::try_from(x).expect("value reduced below a 256-bit modulus")
}

fn bool_word(b: bool) -> U256 {
    if b {
        U256::one()
    } else {
        U256::zero()
    }
}

pub(super) fn run(
    accounts: &mut Accounts,
    env: &Env,
    frame: &Frame<'_>,
    depth: usize,
    gas: &mut u64,
    mut rec: Option<&mut Recorder>,
) -> Outcome {
    let code = frame.code.bytes();
    let mut stack: Vec<U256> = Vec::with_capacity(32);
    let mut memory: Vec<u8> = Vec::new();
    let mut return_data: Vec<u8> = Vec::new();
    let mut pc = 0usize;

    macro_rules! halt {
        ($h:expr) => {
            return Outcome { halt: Some($h), output: Vec::new() }
        };
    }
    macro_rules! pop {
        () => {
            match stack.pop() {
                Some(v) => v,
                None => halt!(Halt::StackUnderflow),
            }
        };
    }
    macro_rules! push {
        ($v:expr) => {{
            let v = $v;
            if stack.len() >= STACK_LIMIT {
                halt!(Halt::StackOverflow);
            }
            stack.push(v);
        }};
    }
    macro_rules! range {
        ($o:expr, $s:expr) => {
            match mem_range($o, $s) {
                Ok(r) => {
                    if let Some((_, end)) = r {
                        expand(&mut memory, end);
                    }
                    r
                }
                Err(h) => halt!(h),
            }
        };
    }
    macro_rules! observe {
        ($a:expr, $b:expr) => {
            if let Some(r) = rec.as_deref_mut() {
                let step = r.offsets.len() - 1;
                r.observations.push(PredicateObservation {
                    comparison_offset: pc,
                    a: $a,
                    b: $b,
                    step,
                });
            }
        };
    }

    loop {
        if pc >= code.len() {
            return Outcome { halt: None, output: Vec::new() };
        }
        if *gas == 0 {
            halt!(Halt::OutOfGas);
        }
        *gas -= 1;
        if let Some(r) = rec.as_deref_mut() {
            r.offsets.push(pc as u32);
        }
        let op = code[pc];
        match op {
            STOP => return Outcome { halt: None, output: Vec::new() },
            ADD => {
                let (a, b) = (pop!(), pop!());
                push!(a.overflowing_add(b).0)
            }
            MUL => {
                let (a, b) = (pop!(), pop!());
                push!(a.overflowing_mul(b).0)
            }
            SUB => {
                let (a, b) = (pop!(), pop!());
                push!(a.overflowing_sub(b).0)
            }
            DIV => {
                let (a, b) = (pop!(), pop!());
                push!(if b.is_zero() { U256::zero() } else { a / b })
            }
            SDIV => {
                let (a, b) = (pop!(), pop!());
                push!(sdiv(a, b))
            }
            MOD => {
                let (a, b) = (pop!(), pop!());
                push!(if b.is_zero() { U256::zero() } else { a % b })
            }
            SMOD => {
                let (a, b) = (pop!(), pop!());
                push!(smod(a, b))
            }
            ADDMOD => {
                let (a, b, n) = (pop!(), pop!(), pop!());
                push!(if n.is_zero() {
                    U256::zero()
                } else {
                    narrow((U512::from(a) + U512::from(b)) % U512::from(n))
                })
            }
            MULMOD => {
                let (a, b, n) = (pop!(), pop!(), pop!());
                push!(if n.is_zero() {
                    U256::zero()
                } else {
                    narrow(a.full_mul(b) % U512::from(n))
                })
            }
            EXP => {
                let (a, b) = (pop!(), pop!());
                push!(a.overflowing_pow(b).0)
            }
            SIGNEXTEND => {
                let (b, x) = (pop!(), pop!());
                push!(signextend(b, x))
            }
            LT => {
                let (a, b) = (pop!(), pop!());
                observe!(a, b);
                push!(bool_word(a < b))
            }
            GT => {
                let (a, b) = (pop!(), pop!());
                observe!(a, b);
                push!(bool_word(a > b))
            }
            SLT => {
                let (a, b) = (pop!(), pop!());
                observe!(a, b);
                push!(bool_word((a ^ SIGN_BIT) < (b ^ SIGN_BIT)))
            }
            SGT => {
                let (a, b) = (pop!(), pop!());
                observe!(a, b);
                push!(bool_word((a ^ SIGN_BIT) > (b ^ SIGN_BIT)))
            }
            EQ => {
                let (a, b) = (pop!(), pop!());
                observe!(a, b);
                push!(bool_word(a == b))
            }
            ISZERO => {
                let a = pop!();
                observe!(a, U256::zero());
                push!(bool_word(a.is_zero()))
            }
            AND => {
                let (a, b) = (pop!(), pop!());
                push!(a & b)
            }
            OR => {
                let (a, b) = (pop!(), pop!());
                push!(a | b)
            }
            XOR => {
                let (a, b) = (pop!(), pop!());
                push!(a ^ b)
            }
            NOT => {
                let a = pop!();
                push!(!a)
            }
            BYTE => {
                let (i, x) = (pop!(), pop!());
                push!(if i < U256::from(32) {
                    (x >> (8 * (31 - i.as_usize()))) & U256::from(0xff)
                } else {
                    U256::zero()
                })
            }
            SHL => {
                let (s, v) = (pop!(), pop!());
                push!(if s < U256::from(256) { v << s.as_usize() } else { U256::zero() })
            }
            SHR => {
                let (s, v) = (pop!(), pop!());
                push!(if s < U256::from(256) { v >> s.as_usize() } else { U256::zero() })
            }
            SAR => {
                let (s, v) = (pop!(), pop!());
                push!(sar(s, v))
            }
            SHA3 => {
                let (o, s) = (pop!(), pop!());
                let h = match range!(o, s) {
                    Some((a, b)) => keccak256(&memory[a..b]),
                    None => keccak256(&[]),
                };
                push!(U256::from_big_endian(&h))
            }
            ADDRESS => push!(frame.address.to_word()),
            BALANCE => {
                let a = Address::from_word(pop!());
                push!(accounts.get(&a).map(|x| x.balance).unwrap_or_default())
            }
            ORIGIN => push!(env.origin.to_word()),
            CALLER => push!(frame.caller.to_word()),
            CALLVALUE => push!(frame.value),
            CALLDATALOAD => {
                let i = pop!();
                let mut word = [0u8; 32];
                copy_padded(&mut word, frame.calldata, i);
                push!(U256::from_big_endian(&word))
            }
            CALLDATASIZE => push!(U256::from(frame.calldata.len())),
            CALLDATACOPY | CODECOPY | RETURNDATACOPY => {
                let (m, from, s) = (pop!(), pop!(), pop!());
                if let Some((a, b)) = range!(m, s) {
                    let src: &[u8] = match op {
                        CALLDATACOPY => frame.calldata,
                        CODECOPY => code,
                        _ => &return_data,
                    };
                    copy_padded(&mut memory[a..b], src, from);
                }
            }
            CODESIZE => push!(U256::from(code.len())),
            RETURNDATASIZE => push!(U256::from(return_data.len())),
            BLOCKHASH => {
                let n = pop!();
                let current = U256::from(env.block_number);
                push!(if n < current && current - n <= U256::from(256) {
                    let mut buf = [0u8; 16];
                    buf[..8].copy_from_slice(&env.blockhash_seed.to_be_bytes());
                    buf[8..].copy_from_slice(&n.low_u64().to_be_bytes());
                    U256::from_big_endian(&keccak256(&buf))
                } else {
                    U256::zero()
                })
            }
            COINBASE => push!(env.coinbase.to_word()),
            TIMESTAMP => push!(U256::from(env.timestamp)),
            NUMBER => push!(U256::from(env.block_number)),
            GASLIMIT => push!(U256::from(env.gas_limit)),
            POP => {
                pop!();
            }
            MLOAD => {
                let o = pop!();
                let (a, _) = range!(o, U256::from(32)).expect("non-empty range");
                push!(U256::from_big_endian(&memory[a..a + 32]))
            }
            MSTORE => {
                let (o, v) = (pop!(), pop!());
                let (a, b) = range!(o, U256::from(32)).expect("non-empty range");
                memory[a..b].copy_from_slice(&v.to_big_endian());
            }
            MSTORE8 => {
                let (o, v) = (pop!(), pop!());
                let (a, _) = range!(o, U256::one()).expect("non-empty range");
                memory[a] = v.low_u32() as u8;
            }
            SLOAD => {
                let k = pop!();
                let v = accounts
                    .get(&frame.address)
                    .and_then(|x| x.storage.get(&k).copied())
                    .unwrap_or_default();
                push!(v)
            }
            SSTORE => {
                let (k, v) = (pop!(), pop!());
                let storage = &mut accounts.entry(frame.address).or_default().storage;
                if v.is_zero() {
                    storage.remove(&k);
                } else {
                    storage.insert(k, v);
                }
            }
            JUMP => {
                let d = pop!();
                match as_usize(d).filter(|&d| frame.code.is_jumpdest(d)) {
                    Some(d) => pc = d,
                    None => halt!(Halt::BadJumpDestination),
                }
                continue;
            }
            JUMPI => {
                let (d, c) = (pop!(), pop!());
                if c.is_zero() {
                    pc += 1;
                } else {
                    match as_usize(d).filter(|&d| frame.code.is_jumpdest(d)) {
                        Some(d) => pc = d,
                        None => halt!(Halt::BadJumpDestination),
                    }
                }
                continue;
            }
            PC => push!(U256::from(pc)),
            MSIZE => push!(U256::from(memory.len())),
            GAS => push!(U256::from(*gas)),
            JUMPDEST => {}
            PUSH0 => push!(U256::zero()),
            PUSH1..=PUSH32 => {
                let n = (op - PUSH1 + 1) as usize;
                let start = pc + 1;
                let mut word = [0u8; 32];
                let avail = code.len().saturating_sub(start).min(n);
                word[32 - n..32 - n + avail].copy_from_slice(&code[start..start + avail]);
                push!(U256::from_big_endian(&word));
                pc += 1 + n;
                continue;
            }
            DUP1..=DUP16 => {
                let n = (op - DUP1 + 1) as usize;
                if stack.len() < n {
                    halt!(Halt::StackUnderflow);
                }
                push!(stack[stack.len() - n])
            }
            SWAP1..=SWAP16 => {
                let n = (op - SWAP1 + 1) as usize;
                let len = stack.len();
                if len < n + 1 {
                    halt!(Halt::StackUnderflow);
                }
                stack.swap(len - 1, len - 1 - n);
            }
            LOG0..=LOG4 => {
                let (o, s) = (pop!(), pop!());
                for _ in 0..(op - LOG0) {
                    pop!();
                }
                range!(o, s);
            }
            CALL => {
                let _gas_arg = pop!();
                let to = Address::from_word(pop!());
                let value = pop!();
                let (io, is, oo, os) = (pop!(), pop!(), pop!(), pop!());
                let input = match range!(io, is) {
                    Some((a, b)) => memory[a..b].to_vec(),
                    None => Vec::new(),
                };
                let out_range = range!(oo, os);
                return_data.clear();
                let own = accounts.get(&frame.address).map(|x| x.balance).unwrap_or_default();
                if value > own {
                    push!(U256::zero());
                } else {
                    let callee = accounts.get(&to).map(|x| x.code.clone()).unwrap_or_default();
                    if callee.is_empty() {
                        transfer(accounts, frame.address, to, value);
                        push!(U256::one());
                    } else if depth >= 1 {
                        // Only one level of contract-to-contract calls is modelled.
                        push!(U256::zero());
                    } else {
                        let snapshot = accounts.clone();
                        transfer(accounts, frame.address, to, value);
                        let sub = Frame {
                            code: &callee,
                            address: to,
                            caller: frame.address,
                            value,
                            calldata: &input,
                        };
                        let out = run(accounts, env, &sub, depth + 1, gas, None);
                        if out.halt.is_some() {
                            *accounts = snapshot;
                            push!(U256::zero());
                        } else {
                            push!(U256::one());
                        }
                        return_data = out.output;
                        if let Some((a, b)) = out_range {
                            let n = (b - a).min(return_data.len());
                            memory[a..a + n].copy_from_slice(&return_data[..n]);
                        }
                    }
                }
            }
            RETURN | REVERT => {
                let (o, s) = (pop!(), pop!());
                let output = match range!(o, s) {
                    Some((a, b)) => memory[a..b].to_vec(),
                    None => Vec::new(),
                };
                let halt = (op == REVERT).then_some(Halt::Revert);
                return Outcome { halt, output };
            }
            SELFDESTRUCT => {
                let beneficiary = Address::from_word(pop!());
                let balance = accounts.get(&frame.address).map(|x| x.balance).unwrap_or_default();
                transfer(accounts, frame.address, beneficiary, balance);
                let me = accounts.entry(frame.address).or_default();
                me.code = Default::default();
                me.storage.clear();
                return Outcome { halt: None, output: Vec::new() };
            }
            other => halt!(Halt::InvalidOpcode(other)),
        }
        pc += 1;
    }
}
