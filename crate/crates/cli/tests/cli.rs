use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn stabheap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabheap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stabheap-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn differential_passes_and_prints_csv() {
    let o = stabheap(&[
        "differential",
        "--capacity",
        "63",
        "--ops",
        "2000",
        "--trials",
        "3",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("trial,ops,mismatches,heap_full,heap_empty,max_steps\n"));
    assert!(out.contains("mismatches,0\n"));
}

#[test]
fn overfilling_reports_exactly_the_extra_inserts() {
    let o = stabheap(&[
        "differential",
        "--capacity",
        "31",
        "--ops",
        "36",
        "--trials",
        "1",
        "--op-mix",
        "1",
        "--format",
        "text",
    ]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["rows"][0]["heap_full"], "5");
    assert_eq!(doc["failures"], 0);
}

#[test]
fn identical_configs_give_identical_reports() {
    let args = [
        "lemma",
        "1",
        "--capacity",
        "31",
        "--trials",
        "50",
        "--ops",
        "20",
        "--seed",
        "5",
    ];
    let a = stabheap(&args);
    let b = stabheap(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_matches_flags_and_flags_win() {
    let path = scratch("config.toml");
    fs::write(
        &path,
        "seed = 5\ncapacity = 31\ntrials = 40\nops = 10\nop_mix = 0.3\n",
    )
    .unwrap();
    let from_file = stabheap(&["lemma", "3", "--config", path.to_str().unwrap()]);
    let from_flags = stabheap(&[
        "lemma",
        "3",
        "--seed",
        "5",
        "--capacity",
        "31",
        "--trials",
        "40",
        "--ops",
        "10",
        "--op-mix",
        "0.3",
    ]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, from_flags.stdout);

    let overridden = stabheap(&[
        "lemma",
        "3",
        "--config",
        path.to_str().unwrap(),
        "--trials",
        "7",
    ]);
    assert!(stdout(&overridden).contains("trials,7\n"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let path = scratch("bad.toml");
    fs::write(&path, "sed = 5\n").unwrap();
    let o = stabheap(&["differential", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_experiment_runs_clean_at_small_scale() {
    for which in ["1", "2", "3", "4"] {
        let o = stabheap(&[
            "lemma",
            which,
            "--capacity",
            "15",
            "--trials",
            "30",
            "--ops",
            "30",
        ]);
        assert!(
            o.status.success(),
            "lemma {which}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = stabheap(&["lemma", "5"]);
    assert!(!o.status.success());
}

#[test]
fn history_exit_codes_follow_violations() {
    let clean = stabheap(&[
        "history",
        "availability",
        "--capacity",
        "31",
        "--trials",
        "30",
    ]);
    assert!(clean.status.success());
    let attributed = stabheap(&[
        "history",
        "availability",
        "--impl",
        "always-fail",
        "--capacity",
        "31",
        "--trials",
        "30",
    ]);
    assert!(attributed.status.success());
    let strict = stabheap(&[
        "history",
        "stabilization",
        "--impl",
        "always-fail",
        "--capacity",
        "31",
        "--trials",
        "30",
    ]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stdout(&strict).contains("InsertOutcome"));
}

#[test]
fn steps_reports_each_capacity() {
    let o = stabheap(&[
        "steps",
        "--capacities",
        "7,63",
        "--trials",
        "5",
        "--ops",
        "50",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("\n7,3,"));
    assert!(out.contains("\n63,6,"));
}

#[test]
fn snapshot_dump_then_load() {
    let snap = scratch("state.json");
    let report = scratch("report.json");
    let dump = stabheap(&[
        "snapshot",
        "dump",
        "--capacity",
        "15",
        "--mode",
        "legitimate",
        "--items",
        "9",
        "--out",
        snap.to_str().unwrap(),
    ]);
    assert!(dump.status.success());
    let load = stabheap(&[
        "snapshot",
        "load",
        snap.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(load.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["legitimate"], true);
    assert_eq!(doc["gap"], 0);
}

#[test]
fn loading_garbage_fails() {
    let path = scratch("garbage.json");
    fs::write(&path, "{\"K\": 0, \"nodes\": []}").unwrap();
    let o = stabheap(&["snapshot", "load", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
