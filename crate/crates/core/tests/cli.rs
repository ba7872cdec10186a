mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{copy_tree, toy_dir};

fn par(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_par")).args(args).output().expect("par runs")
}

fn config() -> String {
    toy_dir().join("par.toml").display().to_string()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn toy_copy() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&toy_dir().join("corpus"), &dir.path().join("corpus"));
    dir
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_accepts_toy_corpus() {
    let out = par(&["--config", &config(), "validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("18 submissions"));
}

#[test]
fn validate_names_broken_fixed_program() {
    let dir = toy_copy();
    let corpus = dir.path().join("corpus");
    std::fs::write(corpus.join("submissions/digits-02/fixed.c"), "int main(void){return 0;}\n").unwrap();
    let out = par(&["--config", &config(), "--corpus", path(&corpus), "validate"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("digits-02"), "{stdout}");
    assert!(stdout.contains("1 of 18"), "{stdout}");
}

#[test]
fn missing_tests_dir_is_a_corpus_error() {
    let dir = toy_copy();
    let corpus = dir.path().join("corpus");
    std::fs::remove_dir_all(corpus.join("assignments/maxpos/tests")).unwrap();
    let out = par(&["--config", &config(), "--corpus", path(&corpus), "validate"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert!(stderr.contains("missing file") && stderr.contains("maxpos"), "{stderr}");
}

#[test]
fn unknown_variant_is_rejected() {
    let out = par(&["--config", &config(), "--variant", "par+nope", "validate"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn stats_json_matches_hand_tally() {
    let out = par(&["--config", &config(), "stats", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let got: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let want: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(toy_dir().join("expected_stats.json")).unwrap()).unwrap();
    assert_eq!(got["corpus"], want);
}

#[test]
fn basic_variant_writes_no_selection() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    // Canned responses are keyed by the peer-aided prompts, so every basic request fails.
    let out = par(&["--config", &config(), "--variant", "basic", "--out", path(&out_dir), "repair"]);
    assert_eq!(out.status.code(), Some(2));
    let sub = out_dir.join("submissions/digits-01");
    assert!(sub.join("prompt.txt").is_file());
    assert!(!sub.join("selection.json").exists());
    let prompt = std::fs::read_to_string(sub.join("prompt.txt")).unwrap();
    assert!(!prompt.contains("Reference Code"));
}

#[test]
fn unreachable_provider_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("par.toml");
    let corpus = toy_dir().join("corpus");
    std::fs::write(
        &cfg,
        format!(
            "corpus = {:?}\nout = \"out\"\nprovider = \"http\"\n[llm]\nendpoint = \"http://127.0.0.1:9/v1/chat/completions\"\nsamples_per_prompt = 1\nmax_retries = 0\n",
            corpus.display().to_string()
        ),
    )
    .unwrap();
    let out = par(&["--config", path(&cfg), "repair"]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("provider unavailable"));
    let failures: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/failures.json")).unwrap()).unwrap();
    assert_eq!(failures.as_object().unwrap().len(), 18);
}

#[test]
fn repair_then_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = par(&["--config", &config(), "--out", path(&out_dir), "repair"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let metrics = std::fs::read(out_dir.join("metrics.json")).unwrap();
    std::fs::remove_file(out_dir.join("metrics.json")).unwrap();
    let report = par(&["--config", &config(), "--out", path(&out_dir), "report"]);
    assert_eq!(report.status.code(), Some(0), "{}", text(&report.stderr));
    assert_eq!(std::fs::read(out_dir.join("metrics.json")).unwrap(), metrics);
    assert_eq!(report.stdout, out.stdout);
}

#[test]
fn select_prints_a_peer_per_submission() {
    let out = par(&["--config", &config(), "select"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let map = v.as_object().unwrap();
    assert_eq!(map.len(), 18);
    for (id, sel) in map {
        let chosen = sel["chosen"].as_str().unwrap();
        assert_ne!(chosen, id);
        assert_eq!(chosen.split('-').next(), id.split('-').next());
    }
}

#[test]
fn prompt_for_one_submission_goes_to_stdout() {
    let out = par(&["--config", &config(), "--variant", "par+bl", "prompt", "--submission", "digits-04"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let golden =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/par_bl.txt")).unwrap();
    assert_eq!(text(&out.stdout), golden);
}
