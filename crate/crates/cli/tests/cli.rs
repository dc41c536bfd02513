use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kgworlds"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

const TINY: &str = r#"{"seed": 3, "K": 6, "w": 4, "s": 2,
  "generation": {"graphs_per_split": {"train": 20, "valid": 5, "test": 5}}}"#;

fn generate_tiny(dir: &Path) -> PathBuf {
    let cfg = dir.join("tiny.json");
    fs::write(&cfg, TINY).unwrap();
    let out = dir.join("suite");
    let o = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(
        summary.contains("worlds") && summary.contains("ambiguity"),
        "{summary}"
    );
    out
}

fn json_stdout(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

/// Rewrites the target of the `nth` instance in `file` to another relation.
fn corrupt_target(file: &Path, nth: usize) {
    let text = fs::read_to_string(file).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut v: Value = serde_json::from_str(&lines[nth]).unwrap();
    let t = v["target"].as_u64().unwrap();
    v["target"] = Value::from(if t == 0 { 1 } else { t - 1 });
    lines[nth] = v.to_string();
    fs::write(file, lines.join("\n") + "\n").unwrap();
}

#[test]
fn fresh_suite_validates_solves_and_reports_stats() {
    let dir = tempfile::tempdir().unwrap();
    let suite = generate_tiny(dir.path());
    let s = suite.to_str().unwrap();

    let o = run(&["validate", s]);
    assert_eq!(o.status.code(), Some(0));
    let report = json_stdout(&o);
    assert_eq!(report["valid"], report["instances"]);
    assert_eq!(report["ambiguous"], 0);
    assert_eq!(report["shortcut_violations"], 0);

    // totals agree with the instance counts recorded in stats.json
    let mut recorded = 0;
    for w in report["worlds"].as_array().unwrap() {
        let id = w["world_id"].as_u64().unwrap();
        let stats: Value = serde_json::from_str(
            &fs::read_to_string(suite.join(format!("worlds/world_{id:03}/stats.json"))).unwrap(),
        )
        .unwrap();
        let c = &stats["instances"];
        let n = c["train"].as_u64().unwrap()
            + c["valid"].as_u64().unwrap()
            + c["test"].as_u64().unwrap();
        assert_eq!(w["instances"].as_u64().unwrap(), n);
        recorded += n;
    }
    assert_eq!(report["instances"].as_u64().unwrap(), recorded);

    let o = run(&["solve", s, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let solve = json_stdout(&o);
    let worlds = solve["worlds"].as_array().unwrap();
    assert_eq!(worlds.len(), report["worlds"].as_array().unwrap().len());
    assert!(worlds.iter().all(|w| w["accuracy"] == 1.0));
    assert_eq!(solve["aggregate"], 1.0);

    let table = String::from_utf8(run(&["solve", s]).stdout).unwrap();
    assert_eq!(table.lines().count(), worlds.len() + 2);

    let o = run(&["stats", s, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let stats = json_stdout(&o);
    let arl = stats["aggregate"]["arl"].as_f64().unwrap();
    assert!((2.0..=10.0).contains(&arl));
    // the stats command recomputes exactly what generation stored
    for row in stats["worlds"].as_array().unwrap() {
        let id = row["world_id"].as_u64().unwrap();
        let stored: Value = serde_json::from_str(
            &fs::read_to_string(suite.join(format!("worlds/world_{id:03}/stats.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(row, &stored);
    }
}

#[test]
fn corrupted_target_fails_validation_and_costs_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let suite = generate_tiny(dir.path());
    corrupt_target(&suite.join("worlds/world_001/train.jsonl"), 4);
    let s = suite.to_str().unwrap();

    let o = run(&["validate", s]);
    assert_eq!(o.status.code(), Some(1));
    let report = json_stdout(&o);
    assert_eq!(
        report["instances"].as_u64().unwrap() - report["valid"].as_u64().unwrap(),
        1
    );
    let bad: Vec<_> = report["worlds"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|w| w["valid"] != w["instances"])
        .collect();
    assert_eq!(bad.len(), 1);
    assert_eq!(bad[0]["world_id"], 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("world 1"));

    let solve = json_stdout(&run(&["solve", s, "--json", "--world-id", "1"]));
    let w = &solve["worlds"][0];
    assert_eq!(
        w["correct"].as_u64().unwrap() + 1,
        w["instances"].as_u64().unwrap()
    );
}

#[test]
fn one_percent_flipped_targets_give_ninety_nine_percent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"seed": 9, "K": 6, "w": 4, "s": 2, "generation": {"graphs_per_split": {"train": 80, "valid": 10, "test": 10}}}"#,
    )
    .unwrap();
    let suite = dir.path().join("suite");
    let o = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        suite.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    corrupt_target(&suite.join("worlds/world_000/train.jsonl"), 17);
    let solve = json_stdout(&run(&["solve", suite.to_str().unwrap(), "--json"]));
    assert_eq!(solve["worlds"][0]["accuracy"], 0.99);
    assert_eq!(solve["worlds"][1]["accuracy"], 1.0);
}

#[test]
fn seed_flag_and_world_filter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    fs::write(&cfg, TINY).unwrap();
    let c = cfg.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&[
        "generate",
        "--config",
        c,
        "--seed",
        "42",
        "--out",
        a.to_str().unwrap(),
        "--world-id",
        "1"
    ])
    .status
    .success());
    assert!(run(&[
        "--workers",
        "2",
        "generate",
        "--config",
        c,
        "--seed",
        "42",
        "--out",
        b.to_str().unwrap()
    ])
    .status
    .success());
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["worlds"].as_array().unwrap().len(), 1);
    for f in ["train.jsonl", "world_graph.json", "stats.json"] {
        assert_eq!(
            fs::read(a.join("worlds/world_001").join(f)).unwrap(),
            fs::read(b.join("worlds/world_001").join(f)).unwrap()
        );
    }
    let o = run(&["validate", b.to_str().unwrap(), "--world-id", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_stdout(&o)["worlds"].as_array().unwrap().len(), 1);
    assert_eq!(
        run(&["validate", a.to_str().unwrap(), "--world-id", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn difficulty_column_from_accuracy_file() {
    let dir = tempfile::tempdir().unwrap();
    let suite = generate_tiny(dir.path());
    let acc = dir.path().join("acc.json");
    fs::write(&acc, r#"{"rule_0": 0.481, "rule_1": 0.758, "2": 0.638}"#).unwrap();
    let s = suite.to_str().unwrap();
    let stats = json_stdout(&run(&[
        "stats",
        s,
        "--json",
        "--accuracy",
        acc.to_str().unwrap(),
    ]));
    let d: Vec<_> = stats["worlds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["difficulty"].clone())
        .collect();
    assert_eq!(
        d[..3],
        [
            Value::from("Hard"),
            Value::from("Easy"),
            Value::from("Medium")
        ]
    );
    assert!(d[3].is_null());
    let table =
        String::from_utf8(run(&["stats", s, "--accuracy", acc.to_str().unwrap()]).stdout).unwrap();
    assert!(table.lines().next().unwrap().trim_end().ends_with('D'));
    assert!(table.lines().any(|l| l.starts_with("AGG")));

    fs::write(&acc, r#"{"rule_0": 1.5}"#).unwrap();
    assert_eq!(
        run(&["stats", s, "--accuracy", acc.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn io_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    for cmd in ["validate", "solve", "stats"] {
        let o = run(&[cmd, missing.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
    }
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"K\": 20,\n \"gamma\": 2}").unwrap();
    let o = run(&[
        "generate",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json:2"));

    fs::write(&bad, r#"{"generation": {"gamma": 1.5}}"#).unwrap();
    let o = run(&[
        "generate",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));

    // a second generate into the same directory is refused
    let suite = generate_tiny(dir.path());
    let cfg = dir.path().join("tiny.json");
    let o = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        suite.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
