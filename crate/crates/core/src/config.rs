//! Generation and suite configuration.
//!
//! Defaults follow the published generation hyperparameters where they
//! exist (K = 20, half the relations symmetric, w = 20, s = 1, gamma = 0.8,
//! 5000/1000/1000 graphs per world, resolution length at most 10). The rest
//! (node pool, cycle count, noise knobs, descriptor split fractions) are
//! local choices recorded in every written suite.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Valid => self.valid,
            Split::Test => self.test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.valid + self.test
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.valid, self.test]
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.as_array();
        if f.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::config("split fractions must be positive"));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("split fractions must sum to 1"));
        }
        Ok(())
    }
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.7,
            valid: 0.15,
            test: 0.15,
        }
    }
}

/// Per-world generation knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    /// Multiplicative decay of a rule's selection weight each time it is used.
    pub gamma: f64,
    /// Upper bound on expansions per generation cycle (lower bound is 2).
    pub max_expansions: usize,
    /// Completed cycles (every world rule used once) required before stopping.
    pub cycles: usize,
    /// Fresh nodes to spend on a world graph.
    pub node_pool: usize,
    /// Longest resolution path, in edges.
    pub max_walk_len: usize,
    pub graphs_per_split: SplitCounts,
    /// Neighbour edges at BFS depth d are kept with probability noise_gamma^d.
    pub noise_gamma: f64,
    pub noise_depth: usize,
    pub descriptor_split: SplitFractions,
    /// Walk enumeration cap per world-graph edge.
    pub max_walks_per_edge: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            gamma: 0.8,
            max_expansions: 5,
            cycles: 2,
            node_pool: 100,
            max_walk_len: 10,
            graphs_per_split: SplitCounts {
                train: 5000,
                valid: 1000,
                test: 1000,
            },
            noise_gamma: 0.8,
            noise_depth: 2,
            descriptor_split: SplitFractions::default(),
            max_walks_per_edge: 10_000,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64, allow_zero: bool| {
            let lo_ok = if allow_zero { v >= 0.0 } else { v > 0.0 };
            if lo_ok && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        unit("gamma", self.gamma, false)?;
        // zero noise is allowed and yields bare resolution paths
        unit("noise_gamma", self.noise_gamma, true)?;
        if self.max_expansions < 2 {
            return Err(Error::config("max_expansions must be >= 2"));
        }
        if self.cycles < 1 {
            return Err(Error::config("cycles must be >= 1"));
        }
        if self.node_pool < 2 {
            return Err(Error::config("node_pool must be >= 2"));
        }
        if self.max_walk_len < 2 {
            return Err(Error::config("max_walk_len must be >= 2"));
        }
        if self.max_walks_per_edge == 0 {
            return Err(Error::config("max_walks_per_edge must be positive"));
        }
        if self.graphs_per_split.total() == 0 {
            return Err(Error::config(
                "graphs_per_split must request at least one graph",
            ));
        }
        self.descriptor_split.validate()
    }
}

/// How many worlds go to the validation and test world sets; the rest
/// train. Assigned in world-id order: train first, then valid, then test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldSplitCounts {
    pub valid: usize,
    pub test: usize,
}

impl Default for WorldSplitCounts {
    fn default() -> Self {
        WorldSplitCounts { valid: 3, test: 3 }
    }
}

impl WorldSplitCounts {
    /// Split label for each of `n` worlds. At least one world always trains;
    /// test worlds are filled before valid ones when there are too few.
    pub fn assign(&self, n: usize) -> Vec<Split> {
        let test = self.test.min(n.saturating_sub(1));
        let valid = self.valid.min(n.saturating_sub(1 + test));
        let train = n - test - valid;
        std::iter::repeat_n(Split::Train, train)
            .chain(std::iter::repeat_n(Split::Valid, valid))
            .chain(std::iter::repeat_n(Split::Test, test))
            .collect()
    }
}

/// Top-level configuration for a full suite run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    #[serde(rename = "K")]
    pub relations: usize,
    pub symmetric_fraction: f64,
    /// Rules per world.
    pub w: usize,
    /// Window stride.
    pub s: usize,
    pub generation: GenConfig,
    pub world_split: WorldSplitCounts,
    /// Worlds per similarity group in the multitask manifest.
    pub similarity_group_size: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            relations: 20,
            symmetric_fraction: 0.5,
            w: 20,
            s: 1,
            generation: GenConfig::default(),
            world_split: WorldSplitCounts::default(),
            similarity_group_size: 5,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.relations < 2 {
            return Err(Error::config(format!(
                "K must be >= 2, got {}",
                self.relations
            )));
        }
        if u32::try_from(self.relations).is_err() {
            return Err(Error::config("K does not fit a relation id"));
        }
        if !(0.0..=1.0).contains(&self.symmetric_fraction) {
            return Err(Error::config("symmetric_fraction must lie in [0, 1]"));
        }
        if self.w == 0 {
            return Err(Error::config("w must be positive"));
        }
        if self.s == 0 {
            return Err(Error::config("s must be positive"));
        }
        self.generation.validate()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: SuiteConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<config>".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: SuiteConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SuiteConfig::default().validate().unwrap();
        assert_eq!(GenConfig::default().graphs_per_split.total(), 7000);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = SuiteConfig::from_json_str(r#"{"K": 6, "w": 4, "s": 2, "generation": {"graphs_per_split": {"train": 20, "valid": 5, "test": 5}}}"#).unwrap();
        assert_eq!(cfg.relations, 6);
        assert_eq!(cfg.generation.gamma, 0.8);
        assert_eq!(cfg.generation.graphs_per_split.test, 5);
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(SuiteConfig::from_json_str(r#"{"K": 1}"#).is_err());
        assert!(SuiteConfig::from_json_str(r#"{"generation": {"gamma": 0.0}}"#).is_err());
        assert!(SuiteConfig::from_json_str(r#"{"generation": {"max_walk_len": 1}}"#).is_err());
        assert!(SuiteConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
        let mut cfg = SuiteConfig::default();
        cfg.generation.descriptor_split.train = 0.9;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn world_split_assignment() {
        let d = WorldSplitCounts::default();
        let s = d.assign(57);
        assert_eq!(s.iter().filter(|&&x| x == Split::Train).count(), 51);
        assert_eq!(&s[51..54], &[Split::Valid; 3]);
        assert_eq!(&s[54..], &[Split::Test; 3]);
        assert_eq!(d.assign(1), vec![Split::Train]);
        assert_eq!(d.assign(3), vec![Split::Train, Split::Test, Split::Test]);
        assert!(d.assign(0).is_empty());
    }
}
