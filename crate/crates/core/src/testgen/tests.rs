use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::evm::parse_abi;

const ABI: &str = r#"[
  {"type":"constructor","inputs":[{"name":"x","type":"uint256"}],"stateMutability":"nonpayable"},
  {"type":"function","name":"Bid","inputs":[],"stateMutability":"payable"},
  {"type":"function","name":"Claim","inputs":[],"stateMutability":"nonpayable"},
  {"type":"function","name":"set","inputs":[
     {"name":"a","type":"uint8"},{"name":"b","type":"int16"},{"name":"c","type":"address"},
     {"name":"d","type":"bool"},{"name":"e","type":"bytes4"},{"name":"f","type":"bytes"},
     {"name":"g","type":"string"},{"name":"h","type":"uint256[2]"},{"name":"i","type":"address[]"}],
   "stateMutability":"nonpayable"}
]"#;

fn artifact() -> ContractArtifact {
    let abi = parse_abi(ABI).unwrap();
    let mut a = ContractArtifact::new("T", vec![0x00], None, abi).unwrap();
    a.pools.uints = vec![U256::from(0xdeadbeefu64)];
    a
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn callable(a: &ContractArtifact) -> Vec<usize> {
    a.abi.iter().enumerate().filter(|(_, f)| !f.is_constructor).map(|(i, _)| i).collect()
}

#[test]
fn seeded_uint_comes_from_pool() {
    let a = artifact();
    let cfg = GenConfig { seeding_probability: 1.0, ..GenConfig::default() };
    let g = Generator::new(&a, &cfg, callable(&a)).unwrap();
    let v = g.random_value(&AbiType::Uint(256), &mut rng(1));
    assert_eq!(v, AbiValue::Uint(U256::from(0xdeadbeefu64)));
    // The pooled constant does not fit in a uint8, so the pool does not match.
    let mut r = rng(2);
    for _ in 0..100 {
        let AbiValue::Uint(v) = g.random_value(&AbiType::Uint(8), &mut r) else { panic!() };
        assert!(v <= U256::from(255));
    }
}

#[test]
fn seeding_frequency_is_half() {
    let mut a = artifact();
    a.pools.uints = vec![U256::from(7)];
    let cfg = GenConfig::default();
    let g = Generator::new(&a, &cfg, callable(&a)).unwrap();
    let mut r = rng(3);
    let n = 10_000;
    let hits = (0..n)
        .filter(|_| g.random_value(&AbiType::Uint(256), &mut r) == AbiValue::Uint(U256::from(7)))
        .count();
    let freq = hits as f64 / n as f64;
    assert!((freq - 0.5).abs() <= 0.05, "frequency {freq}");
}

#[test]
fn zero_address_is_drawn() {
    let a = artifact();
    let cfg = GenConfig::default();
    let g = Generator::new(&a, &cfg, callable(&a)).unwrap();
    let mut r = rng(4);
    let zeros = (0..10_000)
        .filter(|_| g.random_value(&AbiType::Address, &mut r) == AbiValue::Address(Address::ZERO))
        .count();
    // One of 13 equally likely choices.
    let expected = 10_000.0 / 13.0;
    assert!((zeros as f64 - expected).abs() < 5.0 * (expected * 12.0 / 13.0).sqrt(), "{zeros}");
}

#[test]
fn bool_without_pool_hits_both() {
    let a = artifact();
    let cfg = GenConfig::default();
    let g = Generator::new(&a, &cfg, callable(&a)).unwrap();
    let mut r = rng(5);
    let seen: BTreeSet<String> = (0..64).map(|_| g.random_value(&AbiType::Bool, &mut r).to_string()).collect();
    assert_eq!(seen.len(), 2);
}

#[test]
fn tuple_inputs_are_rejected() {
    let abi = parse_abi(
        r#"[{"type":"function","name":"f","inputs":[{"name":"s","type":"tuple","components":[{"name":"a","type":"uint256"}]}],"stateMutability":"nonpayable"}]"#,
    )
    .unwrap();
    let a = ContractArtifact::new("S", vec![0], None, abi).unwrap();
    let cfg = GenConfig::default();
    assert!(matches!(Generator::new(&a, &cfg, [0]), Err(TestgenError::UnsupportedType { .. })));
}

#[test]
fn generated_cases_are_valid_and_mix_senders() {
    let a = artifact();
    let cfg = GenConfig::default();
    let g = Generator::new(&a, &cfg, callable(&a)).unwrap();
    let mut r = rng(6);
    let mut senders = BTreeSet::new();
    let mut bid_with_value = false;
    for _ in 0..1000 {
        let t = g.random_test_case(&mut r);
        t.check(&a, &cfg).unwrap();
        for s in &t.statements {
            if let Statement::FunctionCall { function, value, sender, .. } = s {
                senders.insert(*sender);
                if a.abi[*function].name == "Bid" && !value.is_zero() {
                    bid_with_value = true;
                }
                if !a.abi[*function].payable {
                    assert!(value.is_zero());
                }
            }
        }
    }
    assert!(senders.len() >= 2);
    assert!(bid_with_value);
}

#[test]
fn disabled_pass_time_never_appears() {
    let a = artifact();
    let cfg = GenConfig { pass_time: false, ..GenConfig::default() };
    let g = Generator::new(&a, &cfg, callable(&a)).unwrap();
    let mut r = rng(7);
    for _ in 0..1000 {
        let t = g.random_test_case(&mut r);
        assert!(!t.statements.iter().any(|s| matches!(s, Statement::PassTime { .. })));
    }
}

#[test]
fn generation_is_reproducible() {
    let a = artifact();
    let cfg = GenConfig::default();
    let g = Generator::new(&a, &cfg, callable(&a)).unwrap();
    let pop = |seed| {
        let mut r = rng(seed);
        (0..50).map(|_| g.random_test_case(&mut r)).collect::<Vec<_>>()
    };
    assert_eq!(pop(9), pop(9));
    assert_ne!(pop(9), pop(10));
}

fn call(function: usize) -> Statement {
    Statement::FunctionCall {
        function,
        args: vec![],
        value: U256::zero(),
        sender: Address::derived("x"),
    }
}

fn ctor(x: u64) -> Statement {
    Statement::Constructor {
        args: vec![AbiValue::Uint(U256::from(x))],
        value: U256::zero(),
        sender: Address::derived("x"),
    }
}

#[test]
fn crossover_cut_after_constructor() {
    // Enumerate every cut pair on two 3-statement parents.
    let p1 = TestCase::new(vec![ctor(1), call(1), call(1)]);
    let p2 = TestCase::new(vec![ctor(2), call(2), Statement::PassBlocks { n: 3 }]);
    let (c1, c2) = crossover_at(&p1, &p2, 1, 1, 10);
    assert_eq!(c1.statements, vec![ctor(1), call(2), Statement::PassBlocks { n: 3 }]);
    assert_eq!(c2.statements, vec![ctor(2), call(1), call(1)]);
    for c in 1..=3 {
        for d in 1..=3 {
            let (c1, c2) = crossover_at(&p1, &p2, c, d, 10);
            assert_eq!(c1.len(), c + 3 - d);
            assert_eq!(c2.len(), d + 3 - c);
            assert_eq!(c1.statements[..c], p1.statements[..c]);
            assert_eq!(c1.statements[c..], p2.statements[d..]);
        }
    }
}

#[test]
fn crossover_identical_parents() {
    let p = TestCase::new(vec![ctor(1), call(1), call(2)]);
    let (a, b) = crossover(&p, &p, 10, &mut rng(1));
    assert_eq!((a, b), (p.clone(), p));
}

#[test]
fn mutation_at_capacity_and_minimum() {
    let a = artifact();
    let cfg = GenConfig { max_statements: 3, ..GenConfig::default() };
    let g = Generator::new(&a, &cfg, callable(&a)).unwrap();
    let mut r = rng(11);
    for _ in 0..1000 {
        let t = TestCase::new(vec![ctor(1), call(2)]);
        let m = mutate(&t, &g, &mut r);
        assert!(m.len() >= 2 && m.len() <= 3);
        assert!(m.statements[0].is_constructor());
    }
}

#[test]
fn change_keeps_non_payable_value_zero() {
    let a = artifact();
    let cfg = GenConfig::default();
    let g = Generator::new(&a, &cfg, callable(&a)).unwrap();
    let mut r = rng(12);
    let mut s = call(2);
    for _ in 0..500 {
        g.change(&mut s, &mut r);
        assert!(s.value().is_zero());
    }
}

#[test]
fn sign_extension() {
    assert_eq!(sign_extend(U256::from(0xff), 8), U256::MAX);
    assert_eq!(sign_extend(U256::from(0x7f), 8), U256::from(0x7f));
    assert!(value_matches(&AbiType::Int(16), &AbiValue::Int(U256::MAX)));
    assert!(!value_matches(&AbiType::Int(16), &AbiValue::Int(U256::from(0x8000))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn operators_preserve_invariants(seed in any::<u64>(), max in 2usize..12) {
        let a = artifact();
        let cfg = GenConfig { max_statements: max, ..GenConfig::default() };
        let g = Generator::new(&a, &cfg, callable(&a)).unwrap();
        let mut r = rng(seed);
        let p1 = g.random_test_case(&mut r);
        let p2 = g.random_test_case(&mut r);
        prop_assert!(p1.is_valid(&a, &cfg));
        let (c1, c2) = crossover(&p1, &p2, max, &mut r);
        prop_assert!(c1.check(&a, &cfg).is_ok(), "{:?}", c1.check(&a, &cfg));
        prop_assert!(c2.check(&a, &cfg).is_ok());
        let m = mutate(&c1, &g, &mut r);
        prop_assert!(m.check(&a, &cfg).is_ok(), "{:?}", m.check(&a, &cfg));
    }
}
