//! The generation engines: a random fuzzer and DynaMOSA, sharing one
//! execute/evaluate/archive loop.

mod executor;
mod ranking;
mod targets;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdg::{Cdg, TraceMismatch};
use crate::chain::{ChainError, TraceProvider};
use crate::evm::{ContractArtifact, EvmError};
use crate::fitness::{Archive, DistanceVector, Fitness};
use crate::testgen::{crossover, mutate, GenConfig, Generator, TestCase, TestgenError};

pub use executor::{genesis_state, CaseRun, Executor, StatementOutcome};
pub use ranking::{
    diversity_order, dominates, nondominated_sort, preference_sort, project, subvector_distance, tournament,
    LengthMismatch,
};
pub use targets::{update_targets, TargetSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Fuzzer,
    Dynamosa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Fuzzer, Algorithm::Dynamosa];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Fuzzer => "fuzzer",
            Algorithm::Dynamosa => "dynamosa",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fuzzer" => Ok(Algorithm::Fuzzer),
            "dynamosa" => Ok(Algorithm::Dynamosa),
            other => Err(format!("unknown algorithm `{other}` (expected fuzzer or dynamosa)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("chain: {0}")]
    Chain(#[from] ChainError),
    #[error("trace walk failed at offset {:#x}: no graph node holds it", .0.offset)]
    Trace(#[from] TraceMismatch),
    #[error("encoding: {0}")]
    Encoding(#[from] EvmError),
    #[error(transparent)]
    Testgen(#[from] TestgenError),
}

/// One row of the per-run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub contract: String,
    pub branches_found: usize,
    pub branches_covered: usize,
    pub iterations: usize,
    pub total_time_s: f64,
    pub chain_time_s: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
}

impl RunReport {
    pub fn coverage(&self) -> f64 {
        if self.branches_found == 0 {
            1.0
        } else {
            self.branches_covered as f64 / self.branches_found as f64
        }
    }

    pub fn full_coverage(&self) -> bool {
        self.branches_covered == self.branches_found
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub archive: Archive,
    /// Best fitness seen per branch over the whole run.
    pub best: DistanceVector,
    /// Test cases executed, initial population included.
    pub evaluations: usize,
    /// Out-of-gas transactions per function name.
    pub out_of_gas: BTreeMap<String, usize>,
}

/// Snapshot handed to the observer after every generation.
#[derive(Debug, Clone)]
pub struct GenerationStats {
    pub generation: usize,
    pub covered: usize,
    pub total: usize,
    pub best_front_size: usize,
    pub elapsed: Duration,
    /// Archived test length per branch, `None` while uncovered.
    pub archive_lengths: Vec<Option<usize>>,
    pub best: DistanceVector,
}

impl GenerationStats {
    /// The progress line written to standard error.
    pub fn progress_line(&self) -> String {
        format!(
            "generation {:>4}  covered {}/{}  front {}  elapsed {:.2}s",
            self.generation,
            self.covered,
            self.total,
            self.best_front_size,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock times. Off makes reports reproducible byte for byte.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { timing: true }
    }
}

/// RNG for one purpose within a run, derived from the master seed.
pub fn derive_rng(seed: u64, generation: usize, stream: u64) -> ChaCha8Rng {
    let mut material = Vec::with_capacity(24);
    material.extend(seed.to_le_bytes());
    material.extend((generation as u64).to_le_bytes());
    material.extend(stream.to_le_bytes());
    ChaCha8Rng::from_seed(crate::keccak256(&material))
}

const STREAM_SELECTION: u64 = u64::MAX;

struct Member {
    case: TestCase,
    vector: DistanceVector,
}

/// Shared loop state: executor, archive and bookkeeping.
struct Loop<'a> {
    executor: Executor<'a>,
    generator: Generator<'a>,
    config: &'a GenConfig,
    cdg: &'a Cdg,
    archive: Archive,
    best: DistanceVector,
    evaluations: usize,
    chain_time: Duration,
    out_of_gas: BTreeMap<String, usize>,
    parallel: bool,
}

impl<'a> Loop<'a> {
    fn evaluate(&mut self, cases: Vec<TestCase>) -> Result<Vec<Member>, SearchError> {
        let runs: Vec<Result<CaseRun, SearchError>> = if self.parallel {
            cases.par_iter().map(|c| self.executor.run(c)).collect()
        } else {
            cases.iter().map(|c| self.executor.run(c)).collect()
        };
        let mut members = Vec::with_capacity(cases.len());
        for (case, run) in cases.into_iter().zip(runs) {
            let run = run?;
            self.evaluations += 1;
            self.chain_time += run.chain_time;
            self.executor.out_of_gas(&case, &run, &mut self.out_of_gas);
            let vector = run.evaluation.vector;
            self.archive.update(&case, &vector);
            for (slot, f) in self.best.0.iter_mut().zip(&vector.0) {
                *slot = (*slot).min(*f);
            }
            members.push(Member { case, vector });
        }
        Ok(members)
    }

    fn random_population(&mut self, generation: usize) -> Result<Vec<Member>, SearchError> {
        let cases = (0..self.config.population_size)
            .map(|i| self.generator.random_test_case(&mut derive_rng(self.config.rng_seed, generation, i as u64)))
            .collect();
        self.evaluate(cases)
    }

    fn done(&self) -> bool {
        self.archive.covered_count() == self.cdg.branch_count()
    }
}

/// Runs `algorithm` with no observer.
pub fn run(
    algorithm: Algorithm,
    artifact: &ContractArtifact,
    cdg: &Cdg,
    config: &GenConfig,
    provider: &dyn TraceProvider,
    options: RunOptions,
) -> Result<RunOutcome, SearchError> {
    run_with(algorithm, artifact, cdg, config, provider, options, &mut |_| {})
}

pub fn run_fuzzer(
    artifact: &ContractArtifact,
    cdg: &Cdg,
    config: &GenConfig,
    provider: &dyn TraceProvider,
) -> Result<RunOutcome, SearchError> {
    run(Algorithm::Fuzzer, artifact, cdg, config, provider, RunOptions::default())
}

pub fn run_dynamosa(
    artifact: &ContractArtifact,
    cdg: &Cdg,
    config: &GenConfig,
    provider: &dyn TraceProvider,
) -> Result<RunOutcome, SearchError> {
    run(Algorithm::Dynamosa, artifact, cdg, config, provider, RunOptions::default())
}

/// Runs `algorithm`, calling `observer` after the initial population and
/// after every search iteration.
pub fn run_with(
    algorithm: Algorithm,
    artifact: &ContractArtifact,
    cdg: &Cdg,
    config: &GenConfig,
    provider: &dyn TraceProvider,
    options: RunOptions,
    observer: &mut dyn FnMut(&GenerationStats),
) -> Result<RunOutcome, SearchError> {
    let start = Instant::now();
    let generator = Generator::new(artifact, config, cdg.callable_functions(&artifact.abi))?;
    let unreached = Fitness {
        level: u32::MAX,
        distance: crate::fitness::NormalizedDistance::ONE,
    };
    let mut lp = Loop {
        executor: Executor::new(artifact, cdg, config, provider),
        generator,
        config,
        cdg,
        archive: Archive::new(),
        best: DistanceVector(vec![unreached; cdg.branch_count()]),
        evaluations: 0,
        chain_time: Duration::ZERO,
        out_of_gas: BTreeMap::new(),
        parallel: provider.parallel_safe(),
    };
    let iterations = if config.max_generations == 0 {
        0
    } else {
        match algorithm {
            Algorithm::Fuzzer => fuzzer_loop(&mut lp, start, observer)?,
            Algorithm::Dynamosa => dynamosa_loop(&mut lp, start, observer)?,
        }
    };
    let (total, chain) = if options.timing {
        let total = start.elapsed().as_secs_f64();
        (total, lp.chain_time.as_secs_f64().min(total))
    } else {
        (0.0, 0.0)
    };
    Ok(RunOutcome {
        report: RunReport {
            contract: artifact.name.clone(),
            branches_found: cdg.branch_count(),
            branches_covered: lp.archive.covered_count(),
            iterations,
            total_time_s: total,
            chain_time_s: chain,
            algorithm,
            seed: config.rng_seed,
        },
        archive: lp.archive,
        best: lp.best,
        evaluations: lp.evaluations,
        out_of_gas: lp.out_of_gas,
    })
}

fn stats(lp: &Loop<'_>, generation: usize, front: usize, start: Instant) -> GenerationStats {
    GenerationStats {
        generation,
        covered: lp.archive.covered_count(),
        total: lp.cdg.branch_count(),
        best_front_size: front,
        elapsed: start.elapsed(),
        archive_lengths: (0..lp.cdg.branch_count()).map(|b| lp.archive.get(b).map(TestCase::len)).collect(),
        best: lp.best.clone(),
    }
}

/// Fresh random populations each iteration.
fn fuzzer_loop(lp: &mut Loop<'_>, start: Instant, observer: &mut dyn FnMut(&GenerationStats)) -> Result<usize, SearchError> {
    let first = lp.random_population(0)?;
    observer(&stats(lp, 0, first.len(), start));
    let mut iterations = 0;
    while !lp.done() && iterations < lp.config.max_generations {
        iterations += 1;
        let pop = lp.random_population(iterations)?;
        observer(&stats(lp, iterations, pop.len(), start));
    }
    Ok(iterations)
}

/// Ranks a population against the active targets: the preferred front,
/// then Pareto fronts, each ordered by sub-vector distance. Returns the
/// first `keep` members with their `(front, score)` ranks.
fn select(members: &[Member], targets: &[usize], keep: usize) -> (Vec<usize>, Vec<(usize, usize)>, usize) {
    let vectors: Vec<DistanceVector> = members.iter().map(|m| m.vector.clone()).collect();
    let lengths: Vec<usize> = members.iter().map(|m| m.case.len()).collect();
    let all: Vec<usize> = (0..members.len()).collect();
    let (f0, rest) = preference_sort(&all, &vectors, &lengths, targets);
    let mut fronts = vec![f0];
    fronts.extend(nondominated_sort(&rest, &vectors, targets));
    fronts.retain(|f| !f.is_empty());
    let first_size = fronts.first().map_or(0, Vec::len);
    let mut chosen = Vec::with_capacity(keep);
    let mut ranks = Vec::with_capacity(keep);
    for (fi, front) in fronts.iter().enumerate() {
        if chosen.len() >= keep {
            break;
        }
        for (m, score) in diversity_order(front, &chosen, &vectors, targets) {
            if chosen.len() >= keep {
                break;
            }
            chosen.push(m);
            ranks.push((fi, score));
        }
    }
    (chosen, ranks, first_size)
}

fn dynamosa_loop(lp: &mut Loop<'_>, start: Instant, observer: &mut dyn FnMut(&GenerationStats)) -> Result<usize, SearchError> {
    let cfg = lp.config;
    let n = cfg.population_size;
    let mut targets = TargetSet::initial(lp.cdg);
    let mut population = lp.random_population(0)?;
    update_targets(&mut targets, &lp.archive, lp.cdg);
    let (order, mut ranks, front) = select(&population, &targets.active_vec(), n);
    population = reorder(population, &order);
    observer(&stats(lp, 0, front, start));

    let mut iterations = 0;
    while !lp.done() && iterations < cfg.max_generations {
        iterations += 1;
        let mut rng = derive_rng(cfg.rng_seed, iterations, STREAM_SELECTION);
        let mut offspring = Vec::with_capacity(n);
        while offspring.len() < n {
            let a = &population[tournament(&ranks, cfg.tournament_size, &mut rng)].case;
            let b = &population[tournament(&ranks, cfg.tournament_size, &mut rng)].case;
            let (mut c1, mut c2) = if rng.gen_bool(cfg.crossover_probability) {
                crossover(a, b, cfg.max_statements, &mut rng)
            } else {
                (a.clone(), b.clone())
            };
            if rng.gen_bool(cfg.mutation_probability) {
                c1 = mutate(&c1, &lp.generator, &mut rng);
            }
            if rng.gen_bool(cfg.mutation_probability) {
                c2 = mutate(&c2, &lp.generator, &mut rng);
            }
            offspring.push(c1);
            if offspring.len() < n {
                offspring.push(c2);
            }
        }
        let evaluated = lp.evaluate(offspring)?;
        update_targets(&mut targets, &lp.archive, lp.cdg);
        population.extend(evaluated);
        let (order, r, front) = select(&population, &targets.active_vec(), n);
        ranks = r;
        population = reorder(population, &order);
        observer(&stats(lp, iterations, front, start));
    }
    Ok(iterations)
}

fn reorder(members: Vec<Member>, order: &[usize]) -> Vec<Member> {
    let mut slots: Vec<Option<Member>> = members.into_iter().map(Some).collect();
    order.iter().map(|&i| slots[i].take().expect("selection is a permutation prefix")).collect()
}

#[cfg(test)]
mod tests;
