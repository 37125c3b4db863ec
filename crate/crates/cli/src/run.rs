use std::path::PathBuf;

use evmgen_core::cdg::{cdg_to_dot, cdg_to_json};
use evmgen_core::cfg::{cfg_to_dot, cfg_to_json};
use evmgen_core::report::{emit_meta_csv, emit_suite};
use evmgen_core::search::{run_with, RunOptions};
use evmgen_core::RunOutcome;
use serde_json::json;

use crate::{analyze, exit, load_artifact, provider, resolve_config, write_file, Analysis, CliError, RunArgs};

/// Paths written by one `run`.
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub suite: PathBuf,
    pub meta: PathBuf,
    pub report: PathBuf,
    pub graphs: Vec<PathBuf>,
}

/// Executes `run`; returns the exit code for the coverage reached.
///
/// Inputs are validated and the search completes before any file is
/// written, so failures leave the output directory untouched.
pub fn cmd_run(args: &RunArgs) -> Result<(i32, RunOutcome, RunFiles), CliError> {
    let config = resolve_config(&args.search, args.seed)?;
    let artifact = load_artifact(&args.bytecode, &args.abi, args.deploy_bytecode.as_deref())?;
    let analysis = analyze(artifact)?;
    let Analysis { artifact, cfg, cdg } = &analysis;
    let provider = provider();
    let options = RunOptions {
        timing: !args.search.no_timing,
    };
    let quiet = args.quiet;
    let outcome = run_with(args.algorithm, artifact, cdg, &config, provider.as_ref(), options, &mut |stats| {
        if !quiet {
            eprintln!("{}", stats.progress_line());
        }
    })?;

    let name = &artifact.name;
    let suite = emit_suite(&outcome.report, &outcome.archive, cdg, artifact);
    let meta = emit_meta_csv(std::slice::from_ref(&outcome.report)).map_err(|e| CliError::Internal(e.to_string()))?;
    let branches: Vec<_> = (0..cdg.branch_count())
        .map(|b| {
            let best = outcome.best.0[b];
            json!({
                "id": b,
                "label": cdg.branch_label(b, &artifact.abi),
                "covered": outcome.archive.get(b).is_some(),
                "approach_level": best.level,
                "distance": best.distance.as_f64(),
            })
        })
        .collect();
    let excluded: Vec<&str> = cdg.excluded_functions.iter().map(|&i| artifact.abi[i].name.as_str()).collect();
    let report = json!({
        "report": outcome.report,
        "coverage": outcome.report.coverage(),
        "evaluations": outcome.evaluations,
        "out_of_gas": outcome.out_of_gas,
        "excluded_functions": excluded,
        "branches": branches,
    });
    let report = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))? + "\n";

    let out = &args.out;
    let mut graphs = Vec::new();
    if args.dump_cfg {
        graphs.push(write_file(out, &format!("{name}.cfg.dot"), &cfg_to_dot(cfg))?);
        graphs.push(write_file(out, &format!("{name}.cfg.json"), &pretty(&cfg_to_json(cfg))?)?);
    }
    if args.dump_cdg {
        graphs.push(write_file(out, &format!("{name}.cdg.dot"), &cdg_to_dot(cdg))?);
        graphs.push(write_file(out, &format!("{name}.cdg.json"), &pretty(&cdg_to_json(cdg))?)?);
    }
    let files = RunFiles {
        suite: write_file(out, &format!("{name}.suite.txt"), &suite)?,
        meta: write_file(out, &format!("{name}.meta.csv"), &meta)?,
        report: write_file(out, &format!("{name}.report.json"), &report)?,
        graphs,
    };
    for (function, count) in &outcome.out_of_gas {
        log::warn!("{name}.{function}: {count} transaction(s) ran out of gas");
    }
    let code = if outcome.report.full_coverage() {
        exit::FULL_COVERAGE
    } else {
        exit::PARTIAL_COVERAGE
    };
    Ok((code, outcome, files))
}

fn pretty(value: &serde_json::Value) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))
}
