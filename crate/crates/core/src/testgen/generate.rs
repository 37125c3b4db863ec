use rand::seq::SliceRandom;
use rand::Rng;

use super::{low_mask, sign_extend, value_matches, GenConfig, Statement, TestCase};
use crate::evm::{AbiType, AbiValue, ConstantPools, ContractArtifact};
use crate::{Address, U256};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TestgenError {
    #[error("`{function}` takes an unsupported argument type {ty}")]
    UnsupportedType { function: String, ty: String },
    #[error("contract exposes nothing to call and clock advances are disabled")]
    NothingToCall,
}

/// Uniform draw from the inclusive range `[lo, hi]`.
pub fn uniform_u256<R: Rng + ?Sized>(rng: &mut R, lo: U256, hi: U256) -> U256 {
    debug_assert!(lo <= hi);
    let span = hi - lo;
    if span == U256::MAX {
        return random_word(rng);
    }
    let n = span + 1;
    let mask = low_mask(n.bits() as u16);
    loop {
        let v = random_word(rng) & mask;
        if v < n {
            return lo + v;
        }
    }
}

fn random_word<R: Rng + ?Sized>(rng: &mut R) -> U256 {
    U256(rng.gen::<[u64; 4]>())
}

fn random_bytes<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen()).collect()
}

/// What a test case may do, in ABI order; passes come last.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Choice {
    Call(usize),
    PassTime,
    PassBlocks,
}

/// Draws random statements for one contract.
#[derive(Debug, Clone)]
pub struct Generator<'a> {
    pub artifact: &'a ContractArtifact,
    pub config: &'a GenConfig,
    choices: Vec<Choice>,
    addresses: Vec<Address>,
}

impl<'a> Generator<'a> {
    /// `callable` lists the ABI indices generation may target.
    pub fn new(
        artifact: &'a ContractArtifact,
        config: &'a GenConfig,
        callable: impl IntoIterator<Item = usize>,
    ) -> Result<Self, TestgenError> {
        let mut choices: Vec<Choice> = callable.into_iter().map(Choice::Call).collect();
        let check = |f: &crate::evm::FunctionAbi| {
            for ty in &f.inputs {
                if contains_tuple(ty) {
                    return Err(TestgenError::UnsupportedType {
                        function: f.name.clone(),
                        ty: ty.to_string(),
                    });
                }
            }
            Ok(())
        };
        for c in &choices {
            if let Choice::Call(i) = c {
                check(&artifact.abi[*i])?;
            }
        }
        if let Some(ctor) = artifact.constructor() {
            check(ctor)?;
        }
        if config.pass_time {
            choices.push(Choice::PassTime);
        }
        if config.pass_blocks {
            choices.push(Choice::PassBlocks);
        }
        if choices.is_empty() {
            return Err(TestgenError::NothingToCall);
        }
        Ok(Generator {
            artifact,
            config,
            choices,
            addresses: config.address_choices(),
        })
    }

    fn pools(&self) -> &ConstantPools {
        &self.artifact.pools
    }

    fn seeding_hit<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.gen_bool(self.config.seeding_probability)
    }

    /// A random value of `ty`, drawn from the matching constant pool with the
    /// seeding probability when that pool is non-empty.
    pub fn random_value<R: Rng + ?Sized>(&self, ty: &AbiType, rng: &mut R) -> AbiValue {
        let pools = self.pools();
        let seeded = |candidates: Vec<AbiValue>, rng: &mut R| -> Option<AbiValue> {
            if candidates.is_empty() || !self.seeding_hit(rng) {
                return None;
            }
            candidates.choose(rng).cloned()
        };
        let pick = |candidates: Vec<AbiValue>, rng: &mut R| {
            let matching = candidates.into_iter().filter(|v| value_matches(ty, v)).collect();
            seeded(matching, rng)
        };
        match ty {
            AbiType::Uint(bits) => pick(pools.uints.iter().map(|v| AbiValue::Uint(*v)).collect(), rng)
                .unwrap_or_else(|| AbiValue::Uint(random_word(rng) & low_mask(*bits))),
            AbiType::Int(bits) => pick(pools.ints.iter().map(|v| AbiValue::Int(*v)).collect(), rng)
                .unwrap_or_else(|| AbiValue::Int(sign_extend(random_word(rng), *bits))),
            AbiType::Bool => pick(pools.bools.iter().map(|b| AbiValue::Bool(*b)).collect(), rng)
                .unwrap_or_else(|| AbiValue::Bool(rng.gen())),
            AbiType::Address => pick(pools.addresses.iter().map(|a| AbiValue::Address(*a)).collect(), rng)
                .unwrap_or_else(|| AbiValue::Address(*self.addresses.choose(rng).expect("accounts validated"))),
            AbiType::FixedBytes(n) => pick(pools.bytes.iter().map(|b| AbiValue::FixedBytes(b.clone())).collect(), rng)
                .unwrap_or_else(|| AbiValue::FixedBytes(random_bytes(rng, *n as usize))),
            AbiType::Bytes => seeded(pools.bytes.iter().map(|b| AbiValue::Bytes(b.clone())).collect(), rng)
                .unwrap_or_else(|| {
                    let n = rng.gen_range(0..=self.config.max_dynamic_length);
                    AbiValue::Bytes(random_bytes(rng, n))
                }),
            AbiType::String => {
                let n = rng.gen_range(0..=self.config.max_dynamic_length);
                AbiValue::String((0..n).map(|_| rng.sample(rand::distributions::Alphanumeric) as char).collect())
            }
            AbiType::Array(inner, len) => {
                let n = len.unwrap_or_else(|| rng.gen_range(0..=self.config.max_dynamic_length));
                AbiValue::Array((0..n).map(|_| self.random_value(inner, rng)).collect())
            }
            AbiType::Tuple(_) => unreachable!("tuple inputs are rejected in Generator::new"),
        }
    }

    /// Wei for a payable slot: uniform in the configured range, or a pooled
    /// constant inside that range with the seeding probability.
    pub fn random_wei<R: Rng + ?Sized>(&self, rng: &mut R) -> U256 {
        let [lo, hi] = self.config.value_range.map(|w| w.0);
        let pooled: Vec<U256> = self.pools().uints.iter().copied().filter(|v| (lo..=hi).contains(v)).collect();
        if !pooled.is_empty() && self.seeding_hit(rng) {
            return *pooled.choose(rng).expect("non-empty");
        }
        uniform_u256(rng, lo, hi)
    }

    pub fn random_sender<R: Rng + ?Sized>(&self, rng: &mut R) -> Address {
        *self.config.accounts.choose(rng).expect("accounts validated")
    }

    fn args_for<R: Rng + ?Sized>(&self, inputs: &[AbiType], rng: &mut R) -> Vec<AbiValue> {
        inputs.iter().map(|t| self.random_value(t, rng)).collect()
    }

    pub fn random_constructor<R: Rng + ?Sized>(&self, rng: &mut R) -> Statement {
        let ctor = self.artifact.constructor();
        let args = ctor.map(|f| self.args_for(&f.inputs, rng)).unwrap_or_default();
        let value = if ctor.is_some_and(|f| f.payable) {
            self.random_wei(rng)
        } else {
            U256::zero()
        };
        Statement::Constructor {
            args,
            value,
            sender: self.random_sender(rng),
        }
    }

    /// A uniformly chosen non-constructor statement.
    pub fn random_statement<R: Rng + ?Sized>(&self, rng: &mut R) -> Statement {
        let range = |[lo, hi]: [u64; 2], rng: &mut R| rng.gen_range(lo..=hi);
        match *self.choices.choose(rng).expect("validated non-empty") {
            Choice::PassTime => Statement::PassTime {
                seconds: range(self.config.pass_time_range, rng),
            },
            Choice::PassBlocks => Statement::PassBlocks {
                n: range(self.config.pass_blocks_range, rng),
            },
            Choice::Call(function) => {
                let f = &self.artifact.abi[function];
                let args = self.args_for(&f.inputs, rng);
                let value = if f.payable { self.random_wei(rng) } else { U256::zero() };
                Statement::FunctionCall {
                    function,
                    args,
                    value,
                    sender: self.random_sender(rng),
                }
            }
        }
    }

    /// Deployment followed by `1..=max_statements-1` random statements.
    pub fn random_test_case<R: Rng + ?Sized>(&self, rng: &mut R) -> TestCase {
        let k = rng.gen_range(1..self.config.max_statements);
        let mut statements = Vec::with_capacity(k + 1);
        statements.push(self.random_constructor(rng));
        statements.extend((0..k).map(|_| self.random_statement(rng)));
        TestCase { statements }
    }

    /// Re-rolls one field of `s`: an argument, the sender, or the value of a
    /// payable target. Clock advances get a fresh amount.
    pub fn change<R: Rng + ?Sized>(&self, s: &mut Statement, rng: &mut R) {
        let inputs = s.abi(self.artifact).map(|f| (f.inputs.clone(), f.payable));
        match s {
            Statement::PassTime { seconds } => {
                let [lo, hi] = self.config.pass_time_range;
                *seconds = rng.gen_range(lo..=hi);
            }
            Statement::PassBlocks { n } => {
                let [lo, hi] = self.config.pass_blocks_range;
                *n = rng.gen_range(lo..=hi);
            }
            Statement::Constructor { args, value, sender } | Statement::FunctionCall { args, value, sender, .. } => {
                let (types, payable) = inputs.unwrap_or_default();
                // Slots: each argument, then the sender, then the value.
                let slots = args.len() + 1 + usize::from(payable);
                let slot = rng.gen_range(0..slots);
                if slot < args.len() {
                    args[slot] = self.random_value(&types[slot], rng);
                } else if slot == args.len() {
                    *sender = self.random_sender(rng);
                } else {
                    *value = self.random_wei(rng);
                }
            }
        }
    }
}

fn contains_tuple(ty: &AbiType) -> bool {
    match ty {
        AbiType::Tuple(_) => true,
        AbiType::Array(inner, _) => contains_tuple(inner),
        _ => false,
    }
}
