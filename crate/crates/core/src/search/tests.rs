use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::cdg::build_cdg;
use crate::cfg::build_cfg;
use crate::chain::EmbeddedProvider;
use crate::evm::asm::assemble;
use crate::evm::{disassemble, parse_abi};
use crate::fitness::{normalize, NormalizedDistance};
use crate::U512;

/// Payable fallback guarded by the sent value, then by the clock.
const GUARDS: &str = "
    PUSH1 0x64 CALLVALUE GT PUSH :a JUMPI STOP
    a: PUSH4 0x5f5ec1a0 TIMESTAMP GT PUSH :b JUMPI STOP
    b: STOP";

fn setup() -> (ContractArtifact, Cdg) {
    let code = assemble(GUARDS).unwrap();
    let abi = parse_abi(r#"[{"type":"fallback","stateMutability":"payable"}]"#).unwrap();
    let artifact = ContractArtifact::new("Guards", code.clone(), None, abi).unwrap();
    let cdg = build_cdg(&build_cfg(&disassemble(&code).unwrap()), &artifact.abi);
    (artifact, cdg)
}

fn config(seed: u64) -> GenConfig {
    GenConfig {
        population_size: 20,
        max_generations: 30,
        rng_seed: seed,
        ..GenConfig::default()
    }
}

fn quiet() -> RunOptions {
    RunOptions { timing: false }
}

#[test]
fn both_engines_cover_everything() {
    let (a, cdg) = setup();
    assert_eq!(cdg.branch_count(), 4);
    for alg in Algorithm::ALL {
        let out = run(alg, &a, &cdg, &config(1), &EmbeddedProvider, quiet()).unwrap();
        assert!(out.report.full_coverage(), "{alg}: {:?}", out.report);
        assert!(out.report.iterations < 30);
    }
}

#[test]
fn zero_budget_runs_nothing() {
    let (a, cdg) = setup();
    let cfg = GenConfig { max_generations: 0, ..config(1) };
    for alg in Algorithm::ALL {
        let out = run(alg, &a, &cdg, &cfg, &EmbeddedProvider, quiet()).unwrap();
        assert_eq!(out.report.iterations, 0);
        assert!(out.archive.is_empty());
        assert_eq!(out.evaluations, 0);
    }
}

#[test]
fn runs_are_deterministic() {
    let (a, cdg) = setup();
    for alg in Algorithm::ALL {
        let x = run(alg, &a, &cdg, &config(7), &EmbeddedProvider, quiet()).unwrap();
        let y = run(alg, &a, &cdg, &config(7), &EmbeddedProvider, quiet()).unwrap();
        assert_eq!(x.report, y.report);
        assert_eq!(x.archive, y.archive);
        assert_eq!(x.best, y.best);
    }
}

#[test]
fn budget_and_archive_monotonicity() {
    let (a, cdg) = setup();
    // Clock advances disabled: the time guard stays uncovered, so the run
    // uses its whole budget.
    let cfg = GenConfig { pass_time: false, max_generations: 10, ..config(3) };
    for alg in Algorithm::ALL {
        let mut history: Vec<GenerationStats> = Vec::new();
        let out = run_with(alg, &a, &cdg, &cfg, &EmbeddedProvider, quiet(), &mut |s| history.push(s.clone())).unwrap();
        assert_eq!(out.report.iterations, 10);
        assert_eq!(out.evaluations, cfg.population_size * 11);
        assert!(!out.report.full_coverage());
        assert_eq!(history.len(), 11);
        for w in history.windows(2) {
            assert!(w[1].covered >= w[0].covered);
            for b in 0..cdg.branch_count() {
                assert!(w[1].best.get(b) <= w[0].best.get(b));
                if let (Some(x), Some(y)) = (w[0].archive_lengths[b], w[1].archive_lengths[b]) {
                    assert!(y <= x);
                }
                assert!(w[0].archive_lengths[b].is_none() || w[1].archive_lengths[b].is_some());
            }
        }
    }
}

#[test]
fn initial_targets_are_roots() {
    let (_, cdg) = setup();
    let t = TargetSet::initial(&cdg);
    for b in 0..cdg.branch_count() {
        assert_eq!(t.active.contains(&b), cdg.branches[b].control_parent.is_none());
    }
}

#[test]
fn algorithm_names_round_trip() {
    for alg in Algorithm::ALL {
        assert_eq!(alg.to_string().parse::<Algorithm>(), Ok(alg));
    }
    assert!("nsga".parse::<Algorithm>().is_err());
}

fn brute_fronts(vectors: &[DistanceVector], targets: &[usize]) -> Vec<Vec<usize>> {
    let proj: Vec<_> = vectors.iter().map(|v| project(v, targets)).collect();
    let mut left: Vec<usize> = (0..vectors.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| dominates(&proj[j], &proj[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn fitness_strategy() -> impl Strategy<Value = Fitness> {
    (0u32..3, 0u64..6).prop_map(|(level, d)| Fitness {
        level,
        distance: if d == 5 { NormalizedDistance::ONE } else { normalize(U512::from(d)) },
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn nondominated_sort_matches_oracle(
        rows in proptest::collection::vec(proptest::collection::vec(fitness_strategy(), 5), 50)
    ) {
        let vectors: Vec<DistanceVector> = rows.into_iter().map(DistanceVector).collect();
        let targets = [0, 1, 2, 3, 4];
        let all: Vec<usize> = (0..vectors.len()).collect();
        prop_assert_eq!(nondominated_sort(&all, &vectors, &targets), brute_fronts(&vectors, &targets));
    }

    #[test]
    fn preferred_front_holds_a_minimizer(
        rows in proptest::collection::vec(proptest::collection::vec(fitness_strategy(), 5), 2..30),
        seed in any::<u64>(),
    ) {
        let vectors: Vec<DistanceVector> = rows.into_iter().map(DistanceVector).collect();
        let mut rng = derive_rng(seed, 0, 0);
        let lengths: Vec<usize> = (0..vectors.len()).map(|_| rng.gen_range(2..10)).collect();
        let all: Vec<usize> = (0..vectors.len()).collect();
        let targets = [0, 2, 4];
        let (f0, rest) = preference_sort(&all, &vectors, &lengths, &targets);
        prop_assert!(f0.len() <= targets.len());
        prop_assert_eq!(f0.len() + rest.len(), vectors.len());
        for &b in &targets {
            let best = vectors.iter().map(|v| v.get(b)).min().unwrap();
            prop_assert!(f0.iter().any(|&m| vectors[m].get(b) == best));
        }
    }
}
