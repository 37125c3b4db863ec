use criterion::{black_box, criterion_group, criterion_main, Criterion};
use evmgen_core::cdg::build_cdg;
use evmgen_core::cfg::build_cfg;
use evmgen_core::evm::disassemble;
use evmgen_core::fitness::korel_f;
use evmgen_core::{Polarity, PredicateKind, U256};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn initialization(c: &mut Criterion) {
    let mut group = c.benchmark_group("initialization");
    for fixture in evmgen_fixtures::all() {
        let artifact = fixture.artifact();
        group.bench_function(fixture.name, |b| {
            b.iter(|| {
                let ins = disassemble(black_box(&artifact.runtime_bytecode)).unwrap();
                let cfg = build_cfg(&ins);
                build_cdg(&cfg, &artifact.abi)
            })
        });
    }
    group.finish();
}

fn branch_distance(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let words: Vec<(U256, U256)> = (0..1024)
        .map(|_| {
            let mut a = [0u8; 32];
            let mut b = [0u8; 32];
            rng.fill(&mut a);
            rng.fill(&mut b);
            (U256::from_big_endian(&a), U256::from_big_endian(&b))
        })
        .collect();
    c.bench_function("korel_f/1024 signed comparisons", |b| {
        b.iter(|| {
            words
                .iter()
                .map(|&(x, y)| korel_f(PredicateKind::Slt, 1, Polarity::Fallthrough, x, y))
                .fold(0usize, |n, f| n + f.is_zero() as usize)
        })
    });
}

criterion_group!(benches, initialization, branch_distance);
criterion_main!(benches);
