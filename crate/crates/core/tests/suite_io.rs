use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use kgworlds_core::config::{Split, SplitCounts, SuiteConfig};
use kgworlds_core::dataset_io::{read_manifest, read_suite, write_suite};
use kgworlds_core::{generate_suite, Error};
use serde_json::Value;

fn tiny(seed: u64) -> SuiteConfig {
    let mut cfg = SuiteConfig {
        seed,
        relations: 8,
        w: 6,
        s: 2,
        ..SuiteConfig::default()
    };
    cfg.generation.graphs_per_split = SplitCounts {
        train: 30,
        valid: 8,
        test: 8,
    };
    cfg
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn write_then_read_is_identity() {
    let suite = generate_suite(&tiny(1), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_suite(dir.path(), &suite).unwrap();
    let back = read_suite(dir.path()).unwrap();
    assert_eq!(back, suite);
    let names: BTreeSet<_> = tree(dir.path()).into_iter().map(|(n, _)| n).collect();
    assert!(
        names.contains("manifest.json")
            && names.contains("config.json")
            && names.contains("rules.json")
    );
    for f in [
        "rules.json",
        "world_graph.json",
        "train.jsonl",
        "valid.jsonl",
        "test.jsonl",
        "stats.json",
    ] {
        assert!(names.contains(&format!("worlds/world_000/{f}")), "{f}");
    }
    assert!(!names.iter().any(|n| n.ends_with(".tmp")));
}

#[test]
fn same_seed_writes_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_suite(a.path(), &generate_suite(&tiny(7), None).unwrap()).unwrap();
    write_suite(b.path(), &generate_suite(&tiny(7), None).unwrap()).unwrap();
    assert_eq!(tree(a.path()), tree(b.path()));

    let c = tempfile::tempdir().unwrap();
    write_suite(c.path(), &generate_suite(&tiny(8), None).unwrap()).unwrap();
    assert_ne!(tree(a.path()), tree(c.path()));
}

#[test]
fn manifest_similarity_is_symmetric_with_window_diagonal() {
    let cfg = tiny(2);
    let suite = generate_suite(&cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_suite(dir.path(), &suite).unwrap();
    let m = read_manifest(dir.path()).unwrap();
    let n = m.world_count;
    assert_eq!(m.similarity.entries.len(), n);
    for i in 0..n {
        assert_eq!(m.similarity.get(i, i), cfg.w);
        for j in 0..n {
            assert_eq!(m.similarity.get(i, j), m.similarity.get(j, i));
        }
        if i + 1 < n {
            assert_eq!(m.similarity.get(i, i + 1), cfg.w - cfg.s);
        }
    }
    let ids: Vec<usize> = m.worlds.iter().map(|w| w.world_id).collect();
    assert_eq!(ids, (0..n).collect::<Vec<_>>());
}

/// Recomputes the statistics columns from raw JSONL with no library types.
fn naive_stats(world_dir: &Path) -> (usize, usize, f64, f64, f64) {
    let mut targets = BTreeSet::new();
    let mut descriptors = BTreeSet::new();
    let (mut n, mut len, mut nodes, mut edges) = (0usize, 0usize, 0usize, 0usize);
    for split in ["train", "valid", "test"] {
        let text = fs::read_to_string(world_dir.join(format!("{split}.jsonl"))).unwrap();
        for line in text.lines() {
            let v: Value = serde_json::from_str(line).unwrap();
            n += 1;
            targets.insert(v["target"].as_u64().unwrap());
            let d = v["descriptor"].to_string();
            len += v["descriptor"].as_array().unwrap().len();
            descriptors.insert(d);
            let es = v["edges"].as_array().unwrap();
            edges += es.len();
            let ids: BTreeSet<u64> = es
                .iter()
                .flat_map(|e| [e[0].as_u64().unwrap(), e[2].as_u64().unwrap()])
                .collect();
            nodes += ids.len();
        }
    }
    let n = n as f64;
    (
        targets.len(),
        descriptors.len(),
        len as f64 / n,
        nodes as f64 / n,
        edges as f64 / n,
    )
}

#[test]
fn stats_files_match_an_independent_reread() {
    let dir = tempfile::tempdir().unwrap();
    write_suite(dir.path(), &generate_suite(&tiny(3), None).unwrap()).unwrap();
    let m = read_manifest(dir.path()).unwrap();
    for w in &m.worlds {
        let wd = dir.path().join(&w.dir);
        let stats: Value =
            serde_json::from_str(&fs::read_to_string(wd.join("stats.json")).unwrap()).unwrap();
        let (nc, nd, arl, an, ae) = naive_stats(&wd);
        assert_eq!(stats["nc"].as_u64().unwrap() as usize, nc);
        assert_eq!(stats["nd"].as_u64().unwrap() as usize, nd);
        // stored values are rounded to 6 places
        assert!((stats["arl"].as_f64().unwrap() - arl).abs() <= 5e-7 + 1e-9);
        assert!((stats["an"].as_f64().unwrap() - an).abs() <= 5e-7 + 1e-9);
        assert!((stats["ae"].as_f64().unwrap() - ae).abs() <= 5e-7 + 1e-9);
        assert!((2.0..=10.0).contains(&arl));
        let counts = &stats["instances"];
        assert_eq!(
            counts["train"].as_u64().unwrap() as usize,
            w.instances.train
        );
    }
}

#[test]
fn descriptor_splits_are_disjoint_for_every_seed() {
    for seed in 0..10 {
        let suite = generate_suite(&tiny(seed), None).unwrap();
        for w in &suite.worlds {
            let sets: Vec<BTreeSet<_>> = Split::ALL
                .iter()
                .map(|&s| w.dataset.descriptor_set(s))
                .collect();
            for i in 0..3 {
                assert!(!sets[i].is_empty());
                for j in i + 1..3 {
                    assert!(
                        sets[i].is_disjoint(&sets[j]),
                        "seed {seed} world {}",
                        w.spec.world_id
                    );
                }
            }
        }
    }
}

#[test]
fn malformed_files_report_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    write_suite(dir.path(), &generate_suite(&tiny(4), None).unwrap()).unwrap();
    let jsonl = dir.path().join("worlds/world_001/valid.jsonl");
    let mut lines: Vec<String> = fs::read_to_string(&jsonl)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    lines[2] = "{\"edges\": [[0, 1]]}".into();
    fs::write(&jsonl, lines.join("\n") + "\n").unwrap();
    match read_suite(dir.path()) {
        Err(Error::Parse { path, line, .. }) => {
            assert_eq!(path, jsonl);
            assert_eq!(line, 3);
        }
        other => panic!("expected a parse error, got {other:?}"),
    }

    let manifest = dir.path().join("manifest.json");
    let text = fs::read_to_string(&manifest)
        .unwrap()
        .replacen("\"seed\"", "\"seed\" oops", 1);
    fs::write(&manifest, text).unwrap();
    let err = read_suite(dir.path()).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    assert!(err.to_string().contains("manifest.json:2"));
}

#[test]
fn single_world_filter() {
    let suite = generate_suite(&tiny(5), Some(2)).unwrap();
    assert_eq!(suite.worlds.len(), 1);
    assert_eq!(suite.worlds[0].spec.world_id, 2);
    let full = generate_suite(&tiny(5), None).unwrap();
    assert_eq!(suite.worlds[0], full.worlds[2]);
    assert!(matches!(
        generate_suite(&tiny(5), Some(999)),
        Err(Error::InvalidInput(_))
    ));
}
