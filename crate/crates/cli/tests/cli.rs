use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn csm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csm")).args(args).output().unwrap()
}

fn example_args(sub: &str) -> Vec<String> {
    let mut v = vec![sub.to_string()];
    for (flag, file) in [("--data", "data.graph"), ("--query", "query.graph"), ("--stream", "stream.txt")] {
        v.push(flag.into());
        v.push(fixture(file).display().to_string());
    }
    v
}

fn run(sub: &str, extra: &[&str]) -> Output {
    let mut args = example_args(sub);
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    csm(&refs)
}

#[test]
fn run_prints_match_lines() {
    let out = run("run", &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "m - 3 4 1 6\nm + 3 6 2 5\n");
}

#[test]
fn oracle_diff_matches_run_byte_for_byte() {
    let engine = run("run", &["--no-kss", "--cache-im"]);
    let oracle = run("oracle-diff", &[]);
    assert_eq!(engine.stdout, oracle.stdout);
}

#[test]
fn json_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run("run", &["--report", "json", "--report-out", path.to_str().unwrap(), "--mode", "count"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["command"][1], "run");
    let m = &doc["metrics"];
    assert_eq!(m["matches_added"], 1);
    assert_eq!(m["matches_removed"], 1);
    assert_eq!(m["completed"], true);
    let rows = doc["updates"].as_array().unwrap();
    let bt: u64 = rows.iter().map(|r| r["backtracks"].as_u64().unwrap()).sum();
    assert_eq!(m["backtrackings"].as_u64().unwrap(), bt);
    let em = m["matches_emitted"].as_f64().unwrap();
    assert_eq!(m["match_density"].as_f64().unwrap(), em / bt as f64);
    assert!(doc["config"]["engine"]["search"].get("inject_join_fault").is_none());
}

#[test]
fn csv_report_columns() {
    let out = run("run", &["--report", "csv"]);
    let err = String::from_utf8(out.stderr).unwrap();
    let mut lines = err.lines();
    assert_eq!(
        lines.next().unwrap(),
        "op_index,kind,src,dst,maint_us,search_us,added,removed,backtracks"
    );
    assert!(lines.next().unwrap().starts_with("0,-,4,6,"));
    assert!(lines.next().unwrap().starts_with("1,+,2,6,"));
}

#[test]
fn verify_passes_on_fixture() {
    let out = run("verify", &["--rebuild-every", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("PASS"));
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.graph");
    std::fs::write(&bad, "t 1 0\nv 0 A\nx 1\n").unwrap();
    let q = fixture("query.graph");
    let out = csm(&["run", "--data", bad.to_str().unwrap(), "--query", q.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 3"));

    let stream = dir.path().join("s.txt");
    std::fs::write(&stream, "+ 0 99\n").unwrap();
    let d = fixture("data.graph");
    let out = csm(&["run", "--data", d.to_str().unwrap(), "--query", q.to_str().unwrap(), "--stream", stream.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn skipped_updates_warn_but_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("s.txt");
    std::fs::write(&stream, "+ 4 6\n- 0 1\n").unwrap();
    let (d, q) = (fixture("data.graph"), fixture("query.graph"));
    let out = csm(&["run", "--data", d.to_str().unwrap(), "--query", q.to_str().unwrap(), "--stream", stream.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.matches("warning:").count(), 2);
}

#[test]
fn zero_timeout_exits_4() {
    let out = csm(&["run", "--seed", "7", "--timeout-secs", "0"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn generated_session_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(csm(&["generate", "--seed", "42", "--out-dir", d]).status.code(), Some(0));
    let from_files = csm(&[
        "run",
        "--data",
        &format!("{d}/data.graph"),
        "--query",
        &format!("{d}/query.graph"),
        "--stream",
        &format!("{d}/stream.txt"),
    ]);
    let from_seed = csm(&["run", "--seed", "42"]);
    assert_eq!(from_files.stdout, from_seed.stdout);
    let verify = csm(&["verify", "--seed", "42", "--rebuild-every", "3"]);
    assert_eq!(verify.status.code(), Some(0));
}

#[test]
fn sweep_summary_is_json() {
    let out = csm(&["sweep", "--sessions", "8", "--sequential"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["summary"]["sessions"], 8);
    assert_eq!(doc["summary"]["completion_rate"], 1.0);
    let out = csm(&["sweep", "--sessions", "8", "--verify"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn dump_commands() {
    let q = fixture("query.graph");
    let plans = String::from_utf8(csm(&["dump-plans", "--query", q.to_str().unwrap()]).stdout).unwrap();
    assert_eq!(plans.lines().count(), 4);
    let idx = String::from_utf8(run("dump-index", &[]).stdout).unwrap();
    let first: Vec<&str> = idx.split("# after").next().unwrap().lines().filter(|l| l.starts_with("mp")).collect();
    assert_eq!(first.len(), 10);
    assert_eq!(first.iter().filter(|l| l.ends_with("ON")).count(), 4);
}
