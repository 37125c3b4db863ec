//! Line-oriented test-suite documents.
//!
//! ```text
//! # suite for Auction (dynamosa, seed 3)
//! # covered 4/4 branches
//!
//! test 1 covers Bid@0x4f:taken, Bid@0x4f:fallthrough
//!   deploy() from 0x... value 0
//!   call Bid() from 0x... value 1000
//!   pass_time 3600
//!   pass_blocks 2
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::cdg::{BranchId, Cdg};
use crate::evm::{AbiType, AbiValue, ContractArtifact};
use crate::fitness::Archive;
use crate::search::RunReport;
use crate::testgen::{parse_u256, Statement, TestCase};
use crate::types::{hex_decode, negate};
use crate::Address;

/// A parsed suite entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteTest {
    pub covers: Vec<String>,
    pub case: TestCase,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("suite line {line}: {message}")]
pub struct SuiteParseError {
    pub line: usize,
    pub message: String,
}

/// Archived cases, deduplicated, each with the branches it is annotated
/// with. A branch is listed once, on the case archived for it; cases are
/// ordered by their smallest branch id.
pub fn suite_entries(archive: &Archive) -> Vec<(TestCase, Vec<BranchId>)> {
    let mut groups: Vec<(TestCase, Vec<BranchId>)> = Vec::new();
    for (b, case) in archive.iter() {
        match groups.iter_mut().find(|(c, _)| c == case) {
            Some((_, bs)) => bs.push(b),
            None => groups.push((case.clone(), vec![b])),
        }
    }
    groups
}

pub fn emit_suite(report: &RunReport, archive: &Archive, cdg: &Cdg, artifact: &ContractArtifact) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# suite for {} ({}, seed {})", report.contract, report.algorithm, report.seed);
    let _ = writeln!(out, "# covered {}/{} branches", report.branches_covered, report.branches_found);
    for (i, (case, branches)) in suite_entries(archive).iter().enumerate() {
        let labels: Vec<String> = branches.iter().map(|&b| cdg.branch_label(b, &artifact.abi)).collect();
        let _ = writeln!(out, "\ntest {} covers {}", i + 1, labels.join(", "));
        for s in &case.statements {
            let _ = writeln!(out, "  {}", statement_line(s, artifact));
        }
    }
    out
}

fn args_text(args: &[AbiValue]) -> String {
    args.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

pub fn statement_line(s: &Statement, artifact: &ContractArtifact) -> String {
    match s {
        Statement::Constructor { args, value, sender } => {
            format!("deploy({}) from {sender} value {value}", args_text(args))
        }
        Statement::FunctionCall { function, args, value, sender } => {
            let f = &artifact.abi[*function];
            let name = if f.is_fallback { "fallback" } else { f.name.as_str() };
            format!("call {name}({}) from {sender} value {value}", args_text(args))
        }
        Statement::PassBlocks { n } => format!("pass_blocks {n}"),
        Statement::PassTime { seconds } => format!("pass_time {seconds}"),
    }
}

/// Parses a suite document back into test cases.
pub fn parse_suite(text: &str, artifact: &ContractArtifact) -> Result<Vec<SuiteTest>, SuiteParseError> {
    let mut tests: Vec<SuiteTest> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let err = |message: String| SuiteParseError { line: n + 1, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("test ") {
            let covers = match rest.split_once(" covers ") {
                Some((_, list)) => list.split(", ").map(str::to_string).collect(),
                None => Vec::new(),
            };
            tests.push(SuiteTest { covers, case: TestCase::default() });
            continue;
        }
        let current = tests.last_mut().ok_or_else(|| err("statement before any test header".into()))?;
        let statement = parse_statement(line, artifact).map_err(err)?;
        current.case.statements.push(statement);
    }
    Ok(tests)
}

fn parse_statement(line: &str, artifact: &ContractArtifact) -> Result<Statement, String> {
    if let Some(n) = line.strip_prefix("pass_blocks ") {
        return n.trim().parse().map(|n| Statement::PassBlocks { n }).map_err(|e| e.to_string());
    }
    if let Some(s) = line.strip_prefix("pass_time ") {
        return s.trim().parse().map(|seconds| Statement::PassTime { seconds }).map_err(|e| e.to_string());
    }
    let (head, deploy) = if let Some(rest) = line.strip_prefix("deploy") {
        (rest, true)
    } else if let Some(rest) = line.strip_prefix("call ") {
        (rest, false)
    } else {
        return Err(format!("unrecognized statement `{line}`"));
    };
    let open = head.find('(').ok_or("missing `(`")?;
    let name = head[..open].trim();
    let close = matching_paren(head, open).ok_or("unbalanced parentheses")?;
    let args_src = &head[open + 1..close];
    let tail: Vec<&str> = head[close + 1..].split_whitespace().collect();
    let [from, sender, value_kw, value] = tail.as_slice() else {
        return Err("expected `from <sender> value <wei>`".into());
    };
    if *from != "from" || *value_kw != "value" {
        return Err("expected `from <sender> value <wei>`".into());
    }
    let sender: Address = sender.parse().map_err(|e: crate::ParseAddressError| e.to_string())?;
    let value = parse_u256(value)?;
    if deploy {
        let inputs = artifact.constructor().map(|f| f.inputs.clone()).unwrap_or_default();
        let args = parse_args(args_src, &inputs)?;
        return Ok(Statement::Constructor { args, value, sender });
    }
    let mut last_err = format!("no function `{name}` in the ABI");
    for (i, f) in artifact.abi.iter().enumerate() {
        let matches_name = if name == "fallback" { f.is_fallback } else { f.name == name && !f.is_constructor };
        if !matches_name {
            continue;
        }
        match parse_args(args_src, &f.inputs) {
            Ok(args) => return Ok(Statement::FunctionCall { function: i, args, value, sender }),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn matching_paren(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0;
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in s.char_indices().skip_while(|(i, _)| *i < open) {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '(' | '[' => depth += 1,
            ')' | ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Splits a comma-separated list at top level.
fn split_top(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut in_str, mut escaped, mut start) = (0i32, false, false, 0);
    for (i, c) in s.char_indices() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !parts.is_empty() {
        parts.push(last);
    }
    parts
}

fn parse_args(src: &str, types: &[AbiType]) -> Result<Vec<AbiValue>, String> {
    let parts = split_top(src);
    if parts.len() != types.len() {
        return Err(format!("expected {} arguments, found {}", types.len(), parts.len()));
    }
    types.iter().zip(parts).map(|(t, p)| parse_value(t, p)).collect()
}

/// Parses the text form of a value as rendered by `AbiValue`'s `Display`.
pub fn parse_value(ty: &AbiType, text: &str) -> Result<AbiValue, String> {
    let text = text.trim();
    let bad = || format!("`{text}` is not a valid {ty}");
    let value = match ty {
        AbiType::Uint(_) => AbiValue::Uint(parse_u256(text)?),
        AbiType::Int(_) => match text.strip_prefix('-') {
            Some(mag) => AbiValue::Int(negate(parse_u256(mag)?)),
            None => AbiValue::Int(parse_u256(text)?),
        },
        AbiType::Bool => match text {
            "true" => AbiValue::Bool(true),
            "false" => AbiValue::Bool(false),
            _ => return Err(bad()),
        },
        AbiType::Address => AbiValue::Address(text.parse().map_err(|_| bad())?),
        AbiType::FixedBytes(_) => AbiValue::FixedBytes(hex_decode(text).ok_or_else(bad)?),
        AbiType::Bytes => AbiValue::Bytes(hex_decode(text).ok_or_else(bad)?),
        AbiType::String => AbiValue::String(serde_json::from_str(text).map_err(|_| bad())?),
        AbiType::Array(inner, _) => {
            let body = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
            let items = split_top(body)
                .into_iter()
                .map(|p| parse_value(inner, p))
                .collect::<Result<Vec<_>, _>>()?;
            AbiValue::Array(items)
        }
        AbiType::Tuple(_) => return Err(format!("tuple arguments are not supported: {ty}")),
    };
    if !crate::testgen::value_matches(ty, &value) {
        return Err(bad());
    }
    Ok(value)
}

/// Branch labels of `cdg` keyed by label text.
pub fn labels_by_name(cdg: &Cdg, artifact: &ContractArtifact) -> BTreeMap<String, BranchId> {
    (0..cdg.branch_count()).map(|b| (cdg.branch_label(b, &artifact.abi), b)).collect()
}
