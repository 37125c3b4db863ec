use std::path::PathBuf;

use evmgen_core::report::{comparison_csv, comparison_table, compare, emit_meta_csv, emit_suite, BenchCell, CellResult};
use evmgen_core::search::{run, RunOptions};
use evmgen_core::{Algorithm, ContractArtifact, GenConfig};
use rayon::prelude::*;

use crate::{analyze, fixture_names, provider, resolve_config, write_file, BenchArgs, CliError};

#[derive(Debug, Clone)]
pub struct BenchSummary {
    pub cells: Vec<BenchCell>,
    pub meta_csv: PathBuf,
    pub comparison_csv: PathBuf,
    pub table: String,
}

/// Runs every (contract, engine, seed) cell and writes the meta CSV, the
/// comparison CSV and table, and one suite per successful cell.
///
/// A cell that fails is recorded and the bench carries on.
pub fn cmd_bench(args: &BenchArgs) -> Result<BenchSummary, CliError> {
    if args.runs < 2 {
        return Err(CliError::Input("--runs must be at least 2".into()));
    }
    let base = resolve_config(&args.search, None)?;
    if let Some(p) = args.fuzzer_seeding_probability {
        let mut c = base.clone();
        c.seeding_probability = p;
        c.validate()?;
    }
    let mut names = fixture_names(&args.fixtures)?;
    if !args.contracts.is_empty() {
        for wanted in &args.contracts {
            if !names.contains(wanted) {
                return Err(CliError::Input(format!("no fixture named {wanted} in {}", args.fixtures.display())));
            }
        }
        names.retain(|n| args.contracts.contains(n));
    }
    if names.is_empty() {
        return Err(CliError::Input(format!("no *.bin-runtime files in {}", args.fixtures.display())));
    }
    let artifacts: Vec<Result<ContractArtifact, String>> = names
        .iter()
        .map(|n| ContractArtifact::load_named(&args.fixtures, n).map_err(|e| e.to_string()))
        .collect();

    let jobs: Vec<(usize, Algorithm, u64)> = (0..names.len())
        .flat_map(|c| Algorithm::ALL.into_iter().flat_map(move |a| (0..args.runs).map(move |r| (c, a, r))))
        .collect();
    let options = RunOptions {
        timing: !args.search.no_timing,
    };
    let results: Vec<(BenchCell, Option<String>)> = jobs
        .par_iter()
        .map(|&(c, algorithm, r)| {
            let seed = args.seed + r;
            let mut config = base.clone();
            config.rng_seed = seed;
            if algorithm == Algorithm::Fuzzer {
                if let Some(p) = args.fuzzer_seeding_probability {
                    config.seeding_probability = p;
                }
            }
            let result = run_cell(&artifacts[c], algorithm, &config, options);
            let (result, suite) = match result {
                Ok((cell, suite)) => (Ok(cell), Some(suite)),
                Err(e) => (Err(e), None),
            };
            match &result {
                _ if args.quiet => {}
                Ok(r) => eprintln!(
                    "{} {algorithm} seed {seed}: {}/{} branches",
                    names[c], r.report.branches_covered, r.report.branches_found
                ),
                Err(e) => eprintln!("{} {algorithm} seed {seed}: failed: {e}", names[c]),
            }
            let cell = BenchCell {
                contract: names[c].clone(),
                algorithm,
                seed,
                result,
            };
            (cell, suite)
        })
        .collect();

    let suites_dir = args.out.join("suites");
    for (cell, suite) in &results {
        if let Some(suite) = suite {
            write_file(&suites_dir, &format!("{}-{}-{}.suite.txt", cell.contract, cell.algorithm, cell.seed), suite)?;
        }
    }
    let cells: Vec<BenchCell> = results.into_iter().map(|(c, _)| c).collect();
    let reports: Vec<_> = cells
        .iter()
        .filter_map(|c| c.result.as_ref().ok())
        .map(|r| r.report.clone())
        .collect();
    let meta = if reports.is_empty() {
        String::new()
    } else {
        emit_meta_csv(&reports).map_err(|e| CliError::Internal(e.to_string()))?
    };
    let rows = compare(&cells);
    let table = comparison_table(&rows);
    Ok(BenchSummary {
        meta_csv: write_file(&args.out, "meta.csv", &meta)?,
        comparison_csv: write_file(&args.out, "comparison.csv", &comparison_csv(&rows))?,
        table: {
            write_file(&args.out, "comparison.txt", &table)?;
            table
        },
        cells,
    })
}

fn run_cell(
    artifact: &Result<ContractArtifact, String>,
    algorithm: Algorithm,
    config: &GenConfig,
    options: RunOptions,
) -> Result<(CellResult, String), String> {
    let artifact = artifact.as_ref().map_err(Clone::clone)?.clone();
    let analysis = analyze(artifact).map_err(|e| e.to_string())?;
    let provider = provider();
    let outcome = run(algorithm, &analysis.artifact, &analysis.cdg, config, provider.as_ref(), options)
        .map_err(|e| e.to_string())?;
    let suite = emit_suite(&outcome.report, &outcome.archive, &analysis.cdg, &analysis.artifact);
    let suite_length = evmgen_core::report::suite_entries(&outcome.archive)
        .iter()
        .map(|(case, _)| case.len())
        .sum();
    Ok((
        CellResult {
            report: outcome.report,
            suite_length,
        },
        suite,
    ))
}
