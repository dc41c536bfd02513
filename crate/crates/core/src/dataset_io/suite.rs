//! On-disk suite layout.
//!
//! ```text
//! <out>/manifest.json        world list, similarity matrix, protocols, config
//! <out>/config.json          resolved configuration
//! <out>/rules.json           permuted master rule list
//! <out>/worlds/world_NNN/    rules.json, world_graph.json,
//!                            train.jsonl, valid.jsonl, test.jsonl, stats.json
//! ```
//!
//! Every file is written to a temporary name and renamed into place.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{Split, SplitCounts, SuiteConfig};
use crate::error::{Error, Result};
use crate::partition::{select_worlds_by_similarity, SelectionMode, SimilarityMatrix, WorldSpec};
use crate::rules::{RelationId, RuleSet};
use crate::sampler::{Descriptor, Edge, Instance, SamplingReport, WorldDataset};
use crate::worldgraph::{NodeId, WorldGraph};

use super::stats::WorldStats;

/// World ids per world set, for single-world training and evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldSets {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// Pretraining groups for a held-out `target` world, drawn from the train
/// worlds by rule overlap with it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultitaskGroups {
    pub target: Option<usize>,
    pub similar: Vec<usize>,
    pub dissimilar: Vec<usize>,
    pub mixed: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocols {
    pub supervised: WorldSets,
    pub multitask: MultitaskGroups,
    /// Train worlds in window order, so neighbours share all but `s` rules.
    pub continual: Vec<usize>,
}

impl Protocols {
    /// `worlds` pairs each world with its world-set label.
    pub fn build(worlds: &[(WorldSpec, Split)], group_size: usize) -> Result<Self> {
        let mut sets = WorldSets::default();
        for (w, s) in worlds {
            match s {
                Split::Train => sets.train.push(w.world_id),
                Split::Valid => sets.valid.push(w.world_id),
                Split::Test => sets.test.push(w.world_id),
            }
        }
        let pool: Vec<WorldSpec> = worlds
            .iter()
            .filter(|(_, s)| *s == Split::Train)
            .map(|(w, _)| w.clone())
            .collect();
        let target = worlds
            .iter()
            .find(|(_, s)| *s == Split::Test)
            .or_else(|| worlds.iter().find(|(_, s)| *s == Split::Valid))
            .map(|(w, _)| w);
        let mut multitask = MultitaskGroups::default();
        if let Some(t) = target {
            let k = group_size.min(pool.len());
            let ids = |mode| -> Result<Vec<usize>> {
                Ok(select_worlds_by_similarity(t, &pool, k, mode)?
                    .into_iter()
                    .map(|w| w.world_id)
                    .collect())
            };
            multitask = MultitaskGroups {
                target: Some(t.world_id),
                similar: ids(SelectionMode::MostSimilar)?,
                dissimilar: ids(SelectionMode::LeastSimilar)?,
                mixed: ids(SelectionMode::Mixed)?,
            };
        }
        Ok(Protocols {
            continual: sets.train.clone(),
            supervised: sets,
            multitask,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteWorld {
    pub spec: WorldSpec,
    pub split: Split,
    /// Regeneration attempt that produced a closed world graph.
    pub attempt: usize,
    /// The world's rules, in window order.
    pub rules: RuleSet,
    pub graph: WorldGraph,
    pub dataset: WorldDataset,
    pub stats: WorldStats,
    pub report: SamplingReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Suite {
    pub config: SuiteConfig,
    /// Master rule list after the partition permutation.
    pub master: RuleSet,
    /// Rule overlap between every pair of windows, indexed by world id.
    pub similarity: SimilarityMatrix,
    pub protocols: Protocols,
    /// Generated worlds, ascending by id.
    pub worlds: Vec<SuiteWorld>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    #[serde(rename = "K")]
    pub relations: usize,
    pub rule_count: usize,
    /// Windows in the partition; `worlds` may list a subset.
    pub world_count: usize,
    pub worlds: Vec<ManifestWorld>,
    pub similarity: SimilarityMatrix,
    pub protocols: Protocols,
    pub config: SuiteConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestWorld {
    pub world_id: usize,
    pub split: Split,
    /// Relative to the suite root.
    pub dir: String,
    pub rule_indices: Vec<usize>,
    pub attempt: usize,
    pub instances: SplitCounts,
    pub report: SamplingReport,
}

/// One JSONL line.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    edges: Vec<Edge>,
    query: [NodeId; 2],
    target: RelationId,
    resolution_path: Vec<NodeId>,
    descriptor: Descriptor,
    world_id: usize,
}

impl InstanceRecord {
    fn from_instance(i: &Instance) -> Self {
        InstanceRecord {
            edges: i.edges.clone(),
            query: [i.source, i.sink],
            target: i.target,
            resolution_path: i.resolution_path.clone(),
            descriptor: i.descriptor.clone(),
            world_id: i.world_id,
        }
    }

    fn into_instance(self, split: Split) -> Instance {
        Instance {
            world_id: self.world_id,
            split,
            edges: self.edges,
            source: self.query[0],
            sink: self.query[1],
            target: self.target,
            resolution_path: self.resolution_path,
            descriptor: self.descriptor,
        }
    }
}

pub fn world_dir_name(world_id: usize) -> String {
    format!("worlds/world_{world_id:03}")
}

impl Suite {
    pub fn manifest(&self) -> Manifest {
        Manifest {
            seed: self.config.seed,
            relations: self.config.relations,
            rule_count: self.master.len(),
            world_count: self.similarity.len(),
            worlds: self
                .worlds
                .iter()
                .map(|w| ManifestWorld {
                    world_id: w.spec.world_id,
                    split: w.split,
                    dir: world_dir_name(w.spec.world_id),
                    rule_indices: w.spec.rule_indices.clone(),
                    attempt: w.attempt,
                    instances: w.stats.instances,
                    report: w.report.clone(),
                })
                .collect(),
            similarity: self.similarity.clone(),
            protocols: self.protocols.clone(),
            config: self.config.clone(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("suite types serialize");
    bytes.push(b'\n');
    bytes
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn parse_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn write_world(root: &Path, w: &SuiteWorld) -> Result<()> {
    let dir = root.join(world_dir_name(w.spec.world_id));
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_atomic(&dir.join("rules.json"), &to_json(&w.rules))?;
    write_atomic(&dir.join("world_graph.json"), &to_json(&w.graph))?;
    for split in Split::ALL {
        let mut bytes = Vec::new();
        for inst in w.dataset.split(split) {
            serde_json::to_writer(&mut bytes, &InstanceRecord::from_instance(inst))
                .expect("instances serialize");
            bytes.push(b'\n');
        }
        write_atomic(&dir.join(format!("{split}.jsonl")), &bytes)?;
    }
    write_atomic(&dir.join("stats.json"), &to_json(&w.stats))
}

/// Writes `suite` under `root`, which must be absent or empty.
pub fn write_suite(root: &Path, suite: &Suite) -> Result<()> {
    if root.exists() {
        let mut entries = fs::read_dir(root).map_err(io_err(root))?;
        if entries.next().is_some() {
            return Err(Error::input(format!(
                "output directory {} is not empty",
                root.display()
            )));
        }
    }
    fs::create_dir_all(root).map_err(io_err(root))?;
    suite
        .worlds
        .par_iter()
        .try_for_each(|w| write_world(root, w))?;
    write_atomic(&root.join("rules.json"), &to_json(&suite.master))?;
    write_atomic(&root.join("config.json"), &to_json(&suite.config))?;
    // the manifest goes last so a complete manifest implies complete worlds
    write_atomic(&root.join("manifest.json"), &to_json(&suite.manifest()))
}

pub fn read_manifest(root: &Path) -> Result<Manifest> {
    parse_json(&root.join("manifest.json"))
}

fn read_jsonl(path: &Path, split: Split) -> Result<Vec<Instance>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InstanceRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec.into_instance(split));
    }
    Ok(out)
}

/// Loads one world listed in the manifest.
pub fn read_world(root: &Path, entry: &ManifestWorld) -> Result<SuiteWorld> {
    let dir = root.join(&entry.dir);
    let mut dataset = WorldDataset {
        world_id: entry.world_id,
        ..Default::default()
    };
    for split in Split::ALL {
        *dataset.split_mut(split) = read_jsonl(&dir.join(format!("{split}.jsonl")), split)?;
    }
    Ok(SuiteWorld {
        spec: WorldSpec {
            world_id: entry.world_id,
            rule_indices: entry.rule_indices.clone(),
        },
        split: entry.split,
        attempt: entry.attempt,
        rules: parse_json(&dir.join("rules.json"))?,
        graph: parse_json(&dir.join("world_graph.json"))?,
        dataset,
        stats: parse_json(&dir.join("stats.json"))?,
        report: entry.report.clone(),
    })
}

/// Inverse of [`write_suite`].
pub fn read_suite(root: &Path) -> Result<Suite> {
    read_suite_filtered(root, None)
}

/// Like [`read_suite`], but with `only_world` loads just that world.
pub fn read_suite_filtered(root: &Path, only_world: Option<usize>) -> Result<Suite> {
    let manifest = read_manifest(root)?;
    let entries: Vec<&ManifestWorld> = manifest
        .worlds
        .iter()
        .filter(|w| only_world.is_none_or(|id| id == w.world_id))
        .collect();
    if let (Some(id), true) = (only_world, entries.is_empty()) {
        return Err(Error::input(format!(
            "world {id} is not in the suite at {}",
            root.display()
        )));
    }
    let worlds = entries
        .par_iter()
        .map(|entry| read_world(root, entry))
        .collect::<Result<Vec<_>>>()?;
    Ok(Suite {
        config: manifest.config,
        master: parse_json(&root.join("rules.json"))?,
        similarity: manifest.similarity,
        protocols: manifest.protocols,
        worlds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: usize, rules: std::ops::Range<usize>) -> WorldSpec {
        WorldSpec {
            world_id: id,
            rule_indices: rules.collect(),
        }
    }

    #[test]
    fn protocols_group_train_worlds_around_first_test_world() {
        let worlds = vec![
            (spec(0, 0..4), Split::Train),
            (spec(1, 1..5), Split::Train),
            (spec(2, 2..6), Split::Train),
            (spec(3, 3..7), Split::Valid),
            (spec(4, 4..8), Split::Test),
        ];
        let p = Protocols::build(&worlds, 2).unwrap();
        assert_eq!(p.supervised.train, vec![0, 1, 2]);
        assert_eq!(p.supervised.valid, vec![3]);
        assert_eq!(p.supervised.test, vec![4]);
        assert_eq!(p.multitask.target, Some(4));
        assert_eq!(p.multitask.similar, vec![2, 1]);
        assert_eq!(p.multitask.dissimilar, vec![0, 1]);
        assert_eq!(p.multitask.mixed, vec![2, 0]);
        assert_eq!(p.continual, vec![0, 1, 2]);
    }

    #[test]
    fn protocols_without_heldout_worlds() {
        let p = Protocols::build(&[(spec(0, 0..2), Split::Train)], 5).unwrap();
        assert_eq!(p.multitask, MultitaskGroups::default());
    }

    #[test]
    fn jsonl_parse_error_names_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        let good = r#"{"edges":[[0,1,1],[1,2,2]],"query":[0,2],"target":3,"resolution_path":[0,1,2],"descriptor":[1,2],"world_id":0}"#;
        fs::write(&path, format!("{good}\n{good}\n{{\"edges\": oops}}\n")).unwrap();
        match read_jsonl(&path, Split::Train) {
            Err(Error::Parse { path: p, line, .. }) => {
                assert_eq!(p, path);
                assert_eq!(line, 3);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        fs::write(&path, format!("{good}\n")).unwrap();
        let read = read_jsonl(&path, Split::Valid).unwrap();
        assert_eq!(read[0].source, 0);
        assert_eq!(read[0].sink, 2);
        assert_eq!(read[0].split, Split::Valid);
    }

    #[test]
    fn refuses_non_empty_output() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("stray"), b"x").unwrap();
        let suite = Suite {
            config: SuiteConfig::default(),
            master: RuleSet::new(crate::rules::RelationAlphabet::all_symmetric(2), vec![]).unwrap(),
            similarity: SimilarityMatrix { entries: vec![] },
            protocols: Protocols::default(),
            worlds: vec![],
        };
        assert!(matches!(
            write_suite(dir.path(), &suite),
            Err(Error::InvalidInput(_))
        ));
    }
}
