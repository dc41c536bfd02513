//! End-to-end suite generation: alphabet, rules, partition, then every world
//! independently (in parallel) from its own sub-seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SuiteConfig;
use crate::dataset_io::{compute_stats, Protocols, Suite, SuiteWorld};
use crate::error::{Error, Result};
use crate::partition::{partition_rules, SimilarityMatrix};
use crate::rules::{generate_alphabet, generate_rules};
use crate::sampler::build_dataset;
use crate::seed::{rng_for, stage};
use crate::worldgraph::generate_closed_world_graph;

/// Generates the suite for `config`. With `only_world`, the partition and
/// manifest data still cover every window but only that world is built.
pub fn generate_suite(config: &SuiteConfig, only_world: Option<usize>) -> Result<Suite> {
    config.validate()?;
    let seed = config.seed;
    let alphabet = generate_alphabet(
        config.relations,
        config.symmetric_fraction,
        &mut rng_for(seed, &[stage::ALPHABET]),
    )?;
    let rules = generate_rules(&alphabet, &mut rng_for(seed, &[stage::RULES]));
    let partition = partition_rules(
        &rules,
        config.w,
        config.s,
        &mut rng_for(seed, &[stage::PARTITION]),
    )?;
    log::info!("{} rules, {} worlds", rules.len(), partition.worlds.len());

    let splits = config.world_split.assign(partition.worlds.len());
    let labeled: Vec<_> = partition
        .worlds
        .iter()
        .cloned()
        .zip(splits.iter().copied())
        .collect();
    let protocols = Protocols::build(&labeled, config.similarity_group_size)?;
    let similarity = SimilarityMatrix::compute(&partition.worlds);

    let selected: Vec<_> = match only_world {
        Some(id) if id >= labeled.len() => {
            return Err(Error::InvalidInput(format!(
                "world {id} does not exist; the partition has {} worlds",
                labeled.len()
            )))
        }
        Some(id) => vec![labeled[id].clone()],
        None => labeled,
    };

    let gen = &config.generation;
    let worlds = selected
        .into_par_iter()
        .map(|(spec, split)| {
            let (generated, attempt) =
                generate_closed_world_graph(&spec, &partition.rules, gen, seed)?;
            let world_rules = partition.rules.subset(&spec.rule_indices)?;
            let (dataset, report) =
                build_dataset(spec.world_id, &generated.graph, &world_rules, gen, seed)?;
            let stats = compute_stats(&dataset, split)?;
            log::debug!("world {} done: {} instances", spec.world_id, dataset.len());
            Ok(SuiteWorld {
                spec,
                split,
                attempt,
                rules: world_rules,
                graph: generated.graph,
                dataset,
                stats,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Suite {
        config: config.clone(),
        master: partition.rules,
        similarity,
        protocols,
        worlds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub worlds: usize,
    pub rules: usize,
    pub instances: usize,
    /// Ambiguous descriptors over all descriptors found, pooled across worlds.
    pub ambiguity_rate: f64,
}

pub fn summarize(suite: &Suite) -> SuiteSummary {
    let found: usize = suite
        .worlds
        .iter()
        .map(|w| w.report.descriptors_found)
        .sum();
    let ambiguous: usize = suite
        .worlds
        .iter()
        .map(|w| w.report.descriptors_ambiguous)
        .sum();
    SuiteSummary {
        worlds: suite.worlds.len(),
        rules: suite.master.len(),
        instances: suite.worlds.iter().map(|w| w.dataset.len()).sum(),
        ambiguity_rate: if found == 0 {
            0.0
        } else {
            ambiguous as f64 / found as f64
        },
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationCounts {
    pub instances: usize,
    pub valid: usize,
    pub ambiguous: usize,
    pub shortcut_violations: usize,
}

impl ValidationCounts {
    fn add(&mut self, other: &ValidationCounts) {
        self.instances += other.instances;
        self.valid += other.valid;
        self.ambiguous += other.ambiguous;
        self.shortcut_violations += other.shortcut_violations;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldValidation {
    pub world_id: usize,
    #[serde(flatten)]
    pub counts: ValidationCounts,
    /// stats.json disagrees with statistics recomputed from the instances.
    pub stats_mismatch: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteValidation {
    #[serde(flatten)]
    pub totals: ValidationCounts,
    pub worlds: Vec<WorldValidation>,
}

impl SuiteValidation {
    /// Every instance valid and unambiguous, and every stats file current.
    pub fn passed(&self) -> bool {
        self.totals.valid == self.totals.instances
            && self.totals.ambiguous == 0
            && self.worlds.iter().all(|w| !w.stats_mismatch)
    }
}

/// Runs [`validate_instance`](crate::resolver::validate_instance) on every
/// instance of every world against that world's own rules.
pub fn validate_suite(suite: &Suite) -> SuiteValidation {
    let worlds: Vec<WorldValidation> = suite
        .worlds
        .par_iter()
        .map(|w| {
            let reports: Vec<_> = w
                .dataset
                .instances()
                .map(|i| crate::resolver::validate_instance(&w.rules, i))
                .collect();
            WorldValidation {
                world_id: w.spec.world_id,
                counts: ValidationCounts {
                    instances: reports.len(),
                    valid: reports.iter().filter(|r| r.is_valid()).count(),
                    ambiguous: reports.iter().filter(|r| r.ambiguous).count(),
                    shortcut_violations: reports.iter().filter(|r| !r.shortcut_free).count(),
                },
                stats_mismatch: compute_stats(&w.dataset, w.split).map_or(true, |s| s != w.stats),
            }
        })
        .collect();
    let mut totals = ValidationCounts::default();
    for w in &worlds {
        totals.add(&w.counts);
    }
    SuiteValidation { totals, worlds }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldAccuracy {
    pub world_id: usize,
    pub instances: usize,
    pub correct: usize,
    /// `None` for a world without instances.
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub worlds: Vec<WorldAccuracy>,
    /// Correct predictions over all instances.
    pub aggregate: Option<f64>,
}

/// Symbolic baseline accuracy per world, with paths up to the configured
/// maximum resolution length.
pub fn solve_suite(suite: &Suite) -> SolveReport {
    let max_len = suite.config.generation.max_walk_len;
    let worlds: Vec<WorldAccuracy> = suite
        .worlds
        .par_iter()
        .map(|w| {
            let instances = w.dataset.len();
            let correct = w
                .dataset
                .instances()
                .filter(|i| crate::resolver::predict(&w.rules, i, max_len) == Some(i.target))
                .count();
            WorldAccuracy {
                world_id: w.spec.world_id,
                instances,
                correct,
                accuracy: (instances > 0).then(|| correct as f64 / instances as f64),
            }
        })
        .collect();
    let total: usize = worlds.iter().map(|w| w.instances).sum();
    let correct: usize = worlds.iter().map(|w| w.correct).sum();
    SolveReport {
        aggregate: (total > 0).then(|| correct as f64 / total as f64),
        worlds,
    }
}
