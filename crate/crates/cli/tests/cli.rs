use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evmgen_core::report::{parse_meta_csv, parse_suite};
use evmgen_core::ContractArtifact;

fn fixtures() -> PathBuf {
    evmgen_fixtures::checked_in_dir()
}

fn evmgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evmgen"))
        .args(args)
        .env_remove(evmgen_core::chain::RPC_URL_ENV)
        .output()
        .expect("spawn evmgen")
}

fn run_fixture(name: &str, out: &Path, extra: &[&str]) -> Output {
    let dir = fixtures();
    let runtime = dir.join(format!("{name}.bin-runtime"));
    let abi = dir.join(format!("{name}.abi"));
    let deploy = dir.join(format!("{name}.bin"));
    let mut args = vec![
        "run",
        "--bytecode",
        runtime.to_str().unwrap(),
        "--abi",
        abi.to_str().unwrap(),
        "--deploy-bytecode",
        deploy.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ];
    args.extend_from_slice(extra);
    evmgen(&args)
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn auction_run_covers_both_requires() {
    let out = tempfile::tempdir().unwrap();
    let o = run_fixture("Auction", out.path(), &["--algorithm", "dynamosa", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let artifact = ContractArtifact::load_named(&fixtures(), "Auction").unwrap();
    let suite = read(out.path().join("Auction.suite.txt"));
    let tests = parse_suite(&suite, &artifact).unwrap();
    let labels: Vec<&str> = tests.iter().flat_map(|t| t.covers.iter().map(String::as_str)).collect();
    for function in ["Bid", "Claim"] {
        for side in ["taken", "fallthrough"] {
            assert!(
                labels.iter().any(|l| l.starts_with(function) && l.ends_with(side)),
                "{function} {side} missing from {labels:?}"
            );
        }
    }
    let reports = parse_meta_csv(&read(out.path().join("Auction.meta.csv"))).unwrap();
    assert_eq!(reports.len(), 1);
    assert!(reports[0].full_coverage());
    assert!(reports[0].chain_time_s <= reports[0].total_time_s);
}

#[test]
fn missing_abi_is_an_input_error_without_outputs() {
    let out = tempfile::tempdir().unwrap();
    let target = out.path().join("results");
    let runtime = fixtures().join("Auction.bin-runtime");
    let o = evmgen(&[
        "run",
        "--bytecode",
        runtime.to_str().unwrap(),
        "--abi",
        "/nonexistent/Auction.abi",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!target.exists());
}

#[test]
fn zero_generations_is_partial() {
    let out = tempfile::tempdir().unwrap();
    let o = run_fixture("Token", out.path(), &["--max-generations", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let reports = parse_meta_csv(&read(out.path().join("Token.meta.csv"))).unwrap();
    assert_eq!(reports[0].iterations, 0);
    assert_eq!(reports[0].branches_covered, 0);
    assert!(read(out.path().join("Token.suite.txt")).lines().all(|l| l.starts_with('#')));
}

#[test]
fn graph_dumps_on_request() {
    let out = tempfile::tempdir().unwrap();
    let o = run_fixture("Owner", out.path(), &["--dump-cfg", "--dump-cdg", "--max-generations", "1"]);
    assert!(o.status.success() || o.status.code() == Some(2));
    for file in ["Owner.cfg.dot", "Owner.cfg.json", "Owner.cdg.dot", "Owner.cdg.json"] {
        let text = read(out.path().join(file));
        if file.ends_with(".json") {
            serde_json::from_str::<serde_json::Value>(&text).unwrap();
        } else {
            assert!(text.starts_with("digraph"), "{file}");
        }
    }
}

#[test]
fn usage_errors_and_bad_config_are_input_errors() {
    assert_eq!(evmgen(&["run"]).status.code(), Some(3));
    assert_eq!(evmgen(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(evmgen(&["--help"]).status.code(), Some(0));

    let out = tempfile::tempdir().unwrap();
    let config = out.path().join("bad.toml");
    std::fs::write(&config, "population_size = 1\n").unwrap();
    let o = run_fixture("Owner", &out.path().join("x"), &["--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.path().join("x").exists());

    let o = run_fixture("Owner", &out.path().join("y"), &["--seeding-probability", "1.5"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_and_flag_precedence() {
    let out = tempfile::tempdir().unwrap();
    let config = out.path().join("gen.toml");
    std::fs::write(&config, "population_size = 6\nmax_generations = 50\nrng_seed = 9\n").unwrap();
    let o = run_fixture(
        "NestedMagic",
        out.path(),
        &["--config", config.to_str().unwrap(), "--max-generations", "2", "--algorithm", "fuzzer", "--seeding-probability", "0"],
    );
    assert_eq!(o.status.code(), Some(2));
    let reports = parse_meta_csv(&read(out.path().join("NestedMagic.meta.csv"))).unwrap();
    assert_eq!(reports[0].iterations, 2);
    assert_eq!(reports[0].seed, 9);
    let report: serde_json::Value = serde_json::from_str(&read(out.path().join("NestedMagic.report.json"))).unwrap();
    // Six cases in the initial population plus six per iteration.
    assert_eq!(report["evaluations"], 18);
}

#[test]
fn accounts_file_restricts_senders() {
    let out = tempfile::tempdir().unwrap();
    let accounts = out.path().join("accounts.txt");
    std::fs::write(
        &accounts,
        "# two funded senders\n0x00000000000000000000000000000000000000aa 1000000000000000000000\n0x00000000000000000000000000000000000000bb\n",
    )
    .unwrap();
    let o = run_fixture("Bank", out.path(), &["--accounts", accounts.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let suite = read(out.path().join("Bank.suite.txt"));
    for line in suite.lines().filter(|l| l.contains(" from ")) {
        assert!(
            line.contains("from 0x00000000000000000000000000000000000000aa")
                || line.contains("from 0x00000000000000000000000000000000000000bb"),
            "{line}"
        );
    }
}

#[test]
fn progress_lines_on_stderr() {
    let out = tempfile::tempdir().unwrap();
    let dir = fixtures();
    let o = evmgen(&[
        "run",
        "--bytecode",
        dir.join("NestedMagic.bin-runtime").to_str().unwrap(),
        "--abi",
        dir.join("NestedMagic.abi").to_str().unwrap(),
        "--algorithm",
        "fuzzer",
        "--seeding-probability",
        "0",
        "--max-generations",
        "3",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    let stderr = String::from_utf8_lossy(&o.stderr);
    let lines: Vec<&str> = stderr.lines().filter(|l| l.starts_with("generation")).collect();
    assert_eq!(lines.len(), 4, "{stderr}");
    assert!(lines[0].contains("covered") && lines[0].contains("front") && lines[0].contains("elapsed"));
}

fn bench(out: &Path, contracts: &[&str], runs: &str, fixtures: &Path) -> Output {
    let mut args = vec![
        "bench",
        "--fixtures",
        fixtures.to_str().unwrap(),
        "--runs",
        runs,
        "--out",
        out.to_str().unwrap(),
        "--max-generations",
        "5",
        "--population",
        "10",
        "--no-timing",
        "--quiet",
    ];
    for c in contracts {
        args.push("--contract");
        args.push(c);
    }
    evmgen(&args)
}

#[test]
fn bench_counts_rows_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = bench(dir.path(), &["Owner", "Signed"], "3", &fixtures());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let meta = read(a.path().join("meta.csv"));
    assert_eq!(meta.lines().count(), 1 + 2 * 2 * 3);
    assert_eq!(parse_meta_csv(&meta).unwrap().len(), 12);
    let comparison = read(a.path().join("comparison.csv"));
    assert_eq!(comparison.lines().count(), 1 + 2);
    for file in ["meta.csv", "comparison.csv", "comparison.txt"] {
        assert_eq!(read(a.path().join(file)), read(b.path().join(file)), "{file}");
    }
    assert_eq!(std::fs::read_dir(a.path().join("suites")).unwrap().count(), 12);
}

#[test]
fn bench_marks_failing_contract_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let src = fixtures();
    for ext in ["bin-runtime", "abi", "bin"] {
        std::fs::copy(src.join(format!("Owner.{ext}")), dir.path().join(format!("Owner.{ext}"))).unwrap();
    }
    // A tuple parameter cannot be generated, so every cell for it fails.
    std::fs::write(dir.path().join("Broken.bin-runtime"), "6080604052600080fd\n").unwrap();
    std::fs::write(
        dir.path().join("Broken.abi"),
        r#"[{"type":"function","name":"f","inputs":[{"name":"p","type":"tuple","components":[{"name":"a","type":"uint256"}]}],"outputs":[],"stateMutability":"nonpayable"}]"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = bench(&out, &[], "2", dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let comparison = read(out.join("comparison.csv"));
    let rows: Vec<&str> = comparison.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("Broken") && rows[0].ends_with("failed"), "{}", rows[0]);
    assert!(rows[1].starts_with("Owner") && rows[1].ends_with("ok"), "{}", rows[1]);
    assert_eq!(read(out.join("meta.csv")).lines().count(), 1 + 4);
}

#[test]
fn bench_needs_two_runs() {
    let out = tempfile::tempdir().unwrap();
    let o = bench(out.path(), &["Owner"], "1", &fixtures());
    assert_eq!(o.status.code(), Some(3));
    let o = bench(out.path(), &["Nope"], "2", &fixtures());
    assert_eq!(o.status.code(), Some(3));
}
