//! Outputs: suite documents, the per-run meta CSV, and bench comparisons.

mod stats;
mod suite;

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::search::{Algorithm, RunReport};

pub use stats::{vargha_delaney_a12, wilcoxon_rank_sum, EffectSize, StatsError};
pub use suite::{emit_suite, labels_by_name, parse_suite, parse_value, statement_line, suite_entries, SuiteParseError, SuiteTest};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no run reports to write")]
    NoReports,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Header plus one row per report, columns in `RunReport` field order.
pub fn emit_meta_csv(reports: &[RunReport]) -> Result<String, ReportError> {
    if reports.is_empty() {
        return Err(ReportError::NoReports);
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in reports {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn parse_meta_csv(text: &str) -> Result<Vec<RunReport>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<RunReport>, _>>()?)
}

/// Outcome of one (contract, algorithm, seed) bench cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub contract: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub result: Result<CellResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub report: RunReport,
    /// Statements across the emitted suite.
    pub suite_length: usize,
}

/// Per-contract summary comparing DynaMOSA against the fuzzer.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub contract: String,
    pub branches_found: usize,
    /// Mean coverage, time and suite length per algorithm, in `Algorithm::ALL` order.
    pub coverage: [f64; 2],
    pub time_s: [f64; 2],
    pub length: [f64; 2],
    /// Rank-sum p-value on coverage; `None` with fewer than three runs.
    pub p_value: Option<f64>,
    /// Â12 of DynaMOSA coverage over fuzzer coverage.
    pub a12: Option<f64>,
    pub failed: bool,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// One row per contract, in name order.
pub fn compare(cells: &[BenchCell]) -> Vec<ComparisonRow> {
    let mut by_contract: BTreeMap<&str, Vec<&BenchCell>> = BTreeMap::new();
    for c in cells {
        by_contract.entry(&c.contract).or_default().push(c);
    }
    by_contract
        .into_iter()
        .map(|(contract, cs)| {
            let failed = cs.iter().any(|c| c.result.is_err());
            let ok = |alg: Algorithm| -> Vec<&CellResult> {
                cs.iter().filter(|c| c.algorithm == alg).filter_map(|c| c.result.as_ref().ok()).collect()
            };
            let series = |alg: Algorithm, f: &dyn Fn(&CellResult) -> f64| -> Vec<f64> { ok(alg).into_iter().map(f).collect() };
            let cov = |alg| series(alg, &|r: &CellResult| r.report.coverage());
            let [fz, dm] = Algorithm::ALL.map(cov);
            let per_alg = |f: &dyn Fn(&CellResult) -> f64| Algorithm::ALL.map(|a| mean(&series(a, f)));
            let branches_found = cs
                .iter()
                .filter_map(|c| c.result.as_ref().ok())
                .map(|r| r.report.branches_found)
                .next()
                .unwrap_or(0);
            ComparisonRow {
                contract: contract.to_string(),
                branches_found,
                coverage: per_alg(&|r| r.report.coverage()),
                time_s: per_alg(&|r| r.report.total_time_s),
                length: per_alg(&|r| r.suite_length as f64),
                p_value: wilcoxon_rank_sum(&dm, &fz).ok(),
                a12: vargha_delaney_a12(&dm, &fz).ok(),
                failed,
            }
        })
        .collect()
}

fn num(x: f64, digits: usize) -> String {
    if x.is_nan() {
        "n/a".to_string()
    } else {
        format!("{x:.digits$}")
    }
}

/// CSV rendering of the comparison table.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(
        "contract,branches,fuzzer_coverage,dynamosa_coverage,fuzzer_time_s,dynamosa_time_s,fuzzer_length,dynamosa_length,p_value,a12,effect,status\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.contract,
            r.branches_found,
            num(r.coverage[0], 4),
            num(r.coverage[1], 4),
            num(r.time_s[0], 3),
            num(r.time_s[1], 3),
            num(r.length[0], 1),
            num(r.length[1], 1),
            r.p_value.map_or("n/a".into(), |p| format!("{p:.6}")),
            r.a12.map_or("n/a".into(), |a| format!("{a:.4}")),
            r.a12.map_or("n/a", |a| EffectSize::of(a).label()),
            if r.failed { "failed" } else { "ok" },
        );
    }
    out
}

/// Fixed-width text rendering of the comparison table.
pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{:<16} {:>8} {:>10} {:>10} {:>9} {:>9} {:>8} {:>8} {:>10} {:>6} {:<10} {}\n",
        "contract", "branches", "cov fuzz", "cov dyna", "t fuzz", "t dyna", "len fuzz", "len dyna", "p", "A12", "effect", "status"
    );
    for r in rows {
        let pct = |x: f64| if x.is_nan() { "n/a".to_string() } else { format!("{:.1}%", 100.0 * x) };
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>10} {:>10} {:>9} {:>9} {:>8} {:>8} {:>10} {:>6} {:<10} {}",
            r.contract,
            r.branches_found,
            pct(r.coverage[0]),
            pct(r.coverage[1]),
            num(r.time_s[0], 2),
            num(r.time_s[1], 2),
            num(r.length[0], 1),
            num(r.length[1], 1),
            r.p_value.map_or("n/a".into(), |p| format!("{p:.4}")),
            r.a12.map_or("n/a".into(), |a| format!("{a:.2}")),
            r.a12.map_or("n/a", |a| EffectSize::of(a).label()),
            if r.failed { "failed" } else { "ok" },
        );
    }
    out
}
