use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use evmgen_bench::prepared;
use evmgen_core::chain::EmbeddedProvider;
use evmgen_core::fitness::normalize;
use evmgen_core::search::{nondominated_sort, run, Executor, RunOptions};
use evmgen_core::testgen::Generator;
use evmgen_core::{Algorithm, DistanceVector, Fitness, GenConfig, U512};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorting(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let vectors: Vec<DistanceVector> = (0..100)
        .map(|_| {
            DistanceVector(
                (0..16)
                    .map(|_| Fitness {
                        level: rng.gen_range(0..4),
                        distance: normalize(U512::from(rng.gen_range(0u64..1000))),
                    })
                    .collect(),
            )
        })
        .collect();
    let members: Vec<usize> = (0..100).collect();
    let targets: Vec<usize> = (0..16).collect();
    c.bench_function("nondominated_sort/100x16", |b| b.iter(|| nondominated_sort(&members, &vectors, &targets)));
}

fn execution(c: &mut Criterion) {
    let (artifact, cdg) = prepared("Token");
    let config = GenConfig::default();
    let generator = Generator::new(&artifact, &config, cdg.callable_functions(&artifact.abi)).unwrap();
    let executor = Executor::new(&artifact, &cdg, &config, &EmbeddedProvider);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    c.bench_function("execute+evaluate/Token test case", |b| {
        b.iter_batched(
            || generator.random_test_case(&mut rng),
            |case| executor.run(&case).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn engines(c: &mut Criterion) {
    let mut group = c.benchmark_group("engine run");
    group.sample_size(10);
    for name in ["Token", "NestedMagic"] {
        let (artifact, cdg) = prepared(name);
        for algorithm in Algorithm::ALL {
            let config = GenConfig {
                max_generations: 20,
                ..GenConfig::default()
            };
            let options = RunOptions { timing: false };
            group.bench_function(format!("{algorithm}/{name}"), |b| {
                b.iter(|| run(algorithm, &artifact, &cdg, &config, &EmbeddedProvider, options).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sorting, execution, engines);
criterion_main!(benches);
