//! Per-world statistics and difficulty buckets.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{Split, SplitCounts};
use crate::error::{Error, Result};
use crate::sampler::WorldDataset;

/// Rounds to 6 decimal places (exact ties go to even) through the decimal
/// formatter, so the value written to disk is the value held in memory.
pub fn round6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldStats {
    pub world_id: usize,
    /// Which world set the world belongs to.
    pub split: Split,
    /// Distinct target relations.
    pub nc: usize,
    /// Distinct descriptors.
    pub nd: usize,
    /// Mean descriptor length.
    pub arl: f64,
    /// Mean instance node count.
    pub an: f64,
    /// Mean instance edge count.
    pub ae: f64,
    pub instances: SplitCounts,
}

/// Statistics over every instance of `ds`, all splits pooled.
pub fn compute_stats(ds: &WorldDataset, world_split: Split) -> Result<WorldStats> {
    if ds.is_empty() {
        return Err(Error::input(format!(
            "world {} has no instances",
            ds.world_id
        )));
    }
    let n = ds.len() as f64;
    let mean = |f: &dyn Fn(&crate::sampler::Instance) -> usize| {
        round6(ds.instances().map(|i| f(i) as f64).sum::<f64>() / n)
    };
    Ok(WorldStats {
        world_id: ds.world_id,
        split: world_split,
        nc: ds
            .instances()
            .map(|i| i.target)
            .collect::<BTreeSet<_>>()
            .len(),
        nd: ds
            .instances()
            .map(|i| &i.descriptor)
            .collect::<BTreeSet<_>>()
            .len(),
        arl: mean(&|i| i.descriptor.len()),
        an: mean(&|i| i.node_count()),
        ae: mean(&|i| i.edge_count()),
        instances: SplitCounts {
            train: ds.train.len(),
            valid: ds.valid.len(),
            test: ds.test.len(),
        },
    })
}

/// Suite-level row: column means over worlds, plus the number of distinct
/// descriptors across all worlds together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub worlds: usize,
    pub nc: f64,
    pub nd: f64,
    pub nd_pooled: usize,
    pub arl: f64,
    pub an: f64,
    pub ae: f64,
}

pub fn aggregate_stats<'a>(
    stats: &[WorldStats],
    datasets: impl IntoIterator<Item = &'a WorldDataset>,
) -> Result<AggregateStats> {
    if stats.is_empty() {
        return Err(Error::input("no worlds to aggregate"));
    }
    let n = stats.len() as f64;
    let mean = |f: fn(&WorldStats) -> f64| round6(stats.iter().map(f).sum::<f64>() / n);
    let pooled: BTreeSet<_> = datasets
        .into_iter()
        .flat_map(|d| d.instances().map(|i| &i.descriptor))
        .collect();
    Ok(AggregateStats {
        worlds: stats.len(),
        nc: mean(|s| s.nc as f64),
        nd: mean(|s| s.nd as f64),
        nd_pooled: pooled.len(),
        arl: mean(|s| s.arl),
        an: mean(|s| s.an),
        ae: mean(|s| s.ae),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "Easy",
            Difficulty::Medium => "Medium",
            Difficulty::Hard => "Hard",
        })
    }
}

pub const EASY_THRESHOLD: f64 = 0.70;
pub const MEDIUM_THRESHOLD: f64 = 0.54;

/// Buckets a solver accuracy: at least 0.70 is Easy, at least 0.54 Medium,
/// anything lower Hard.
pub fn difficulty_bucket(accuracy: f64) -> Result<Difficulty> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::input(format!("accuracy {accuracy} outside [0, 1]")));
    }
    Ok(if accuracy >= EASY_THRESHOLD {
        Difficulty::Easy
    } else if accuracy >= MEDIUM_THRESHOLD {
        Difficulty::Medium
    } else {
        Difficulty::Hard
    })
}
