use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sbtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbtree")).args(args).output().expect("run sbtree")
}

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/v1"))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn dump_fixture_matches_csv() {
    let o = sbtree(&["dump", "--fixture", "example"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let expected = fs::read_to_string(fixtures().join("example.csv")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), expected);
}

#[test]
fn dump_from_text_and_positions() {
    let dir = tempfile::tempdir().unwrap();
    let (t, p, out) = (dir.path().join("t"), dir.path().join("p"), dir.path().join("o.csv"));
    fs::write(&t, "banana").unwrap();
    fs::write(&p, "1\n2\n3\n").unwrap();
    let o = sbtree(&["dump", "--in", t.to_str().unwrap(), "--positions", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out).unwrap(), "rank,pos,slcp\n1,2,0\n2,1,0\n3,3,0\n");
}

#[test]
fn fixture_dir_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.txt"), "aaa").unwrap();
    fs::write(dir.path().join("tiny.positions"), "1\n2\n3\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sbtree"))
        .args(["dump", "--fixture", "tiny"])
        .env("SBTREE_FIXTURES", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "rank,pos,slcp\n1,3,0\n2,2,1\n3,1,2\n");
}

#[test]
fn build_report_for_keys() {
    let dir = tempfile::tempdir().unwrap();
    let keys = dir.path().join("k.txt");
    let body: String = (0..500u64).map(|i| format!("{}\n", i * 7 % 1009)).collect();
    fs::write(&keys, body + "3\n").unwrap();
    let o = sbtree(&["build", "--in", keys.to_str().unwrap(), "--aggregate", "sum", "--b", "8", "--q", "4", "--t", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["kind"], "keys");
    assert_eq!(v["stats"]["n_keys"], 501);
    assert_eq!(v["rejected"], 0);
    let sum: u64 = (0..500u64).map(|i| i * 7 % 1009).sum::<u64>() + 3;
    assert_eq!(v["root_aggregate"], sum);
    assert_eq!(v["config"]["aggregate"], "sum");
}

#[test]
fn compressed_build_rejects_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let keys = dir.path().join("k.txt");
    fs::write(&keys, "5\n9\n5\n1\n").unwrap();
    let o = sbtree(&["build", "--in", keys.to_str().unwrap(), "--compressed", "--code", "delta"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["stats"]["n_keys"], 3);
    assert_eq!(v["rejected"], 1);
}

#[test]
fn empty_key_file() {
    let dir = tempfile::tempdir().unwrap();
    let keys = dir.path().join("k.txt");
    fs::write(&keys, "").unwrap();
    let o = sbtree(&["build", "--in", keys.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["stats"]["n_keys"], 0);
    let o = sbtree(&["stats", "--in", keys.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().lines().any(|l| l.starts_with("n_keys") && l.ends_with(" 0")));
}

#[test]
fn missing_input_is_an_error() {
    let o = sbtree(&["build"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nothing to build"));
    let o = sbtree(&["build", "--in", "/nonexistent/keys"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let o = sbtree(&["verify", "--ops", "3000", "--seed", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("all suites passed"));
    assert!(out.contains("suite suffix ok"));
}

#[test]
fn verify_catches_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let repro = dir.path().join("repro.json");
    let o = sbtree(&["verify", "--ops", "2000", "--inject-fault", "separator", "--out", repro.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("violation in suite multiset"), "{err}");
    assert!(err.to_lowercase().contains("separator"), "{err}");
    let v: Value = serde_json::from_str(&fs::read_to_string(repro).unwrap()).unwrap();
    assert_eq!(v["suite"], "multiset");
    let ops = v["ops"].as_array().unwrap().len();
    assert!(ops < v["original_ops"].as_u64().unwrap() as usize);
}

#[test]
fn bench_small_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let o = sbtree(&["bench", "--sizes", "10,12", "--reps", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["n"], 4096);
    for r in rows {
        assert_eq!(r["leaves_touched_ok"], true);
        assert!(r["insert_ns"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn bench_binary_input() {
    let dir = tempfile::tempdir().unwrap();
    let keys = dir.path().join("k.bin");
    let bytes: Vec<u8> = (0..2000u32).flat_map(|i| i.wrapping_mul(2654435761).to_le_bytes()).collect();
    fs::write(&keys, bytes).unwrap();
    let o = sbtree(&["bench", "--in", keys.to_str().unwrap(), "--reps", "1", "--compressed"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["n"], 2000);
}
