//! Sliding-window partitioning of a master rule set into overlapping worlds,
//! rule-overlap similarity, and world orderings for multitask and continual
//! protocols.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::RuleSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub world_id: usize,
    /// Indices into the permuted master rule list.
    pub rule_indices: Vec<usize>,
}

/// Result of [`partition_rules`]: the master list after its one-time
/// permutation, and the windows taken over it.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub rules: RuleSet,
    pub worlds: Vec<WorldSpec>,
}

/// Number of windows of width `w` and stride `s` over `n` rules.
pub fn world_count(n: usize, w: usize, s: usize) -> usize {
    if w == 0 || s == 0 || w > n {
        0
    } else {
        (n - w) / s + 1
    }
}

/// Permutes the master list once, then takes windows `[i, i + w)` for
/// `i = 0, s, 2s, ...` up to and including `i = |rules| - w`.
pub fn partition_rules<R: Rng + ?Sized>(
    rules: &RuleSet,
    w: usize,
    s: usize,
    rng: &mut R,
) -> Result<Partition> {
    if w == 0 {
        return Err(Error::config("rules per world w must be positive"));
    }
    if s == 0 {
        return Err(Error::config("stride s must be positive"));
    }
    if w > rules.len() {
        return Err(Error::config(format!(
            "rules per world w = {w} exceeds the {} available rules",
            rules.len()
        )));
    }
    let mut order: Vec<usize> = (0..rules.len()).collect();
    order.shuffle(rng);
    let permuted = rules.reordered(&order)?;

    let worlds = (0..world_count(rules.len(), w, s))
        .map(|world_id| {
            let start = world_id * s;
            WorldSpec {
                world_id,
                rule_indices: (start..start + w).collect(),
            }
        })
        .collect();
    Ok(Partition {
        rules: permuted,
        worlds,
    })
}

/// Rule-overlap count `|R_a ∩ R_b|`.
pub fn similarity(a: &WorldSpec, b: &WorldSpec) -> usize {
    // both index lists are sorted
    let (mut i, mut j, mut n) = (0, 0, 0);
    let (x, y) = (&a.rule_indices, &b.rule_indices);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityMatrix {
    pub entries: Vec<Vec<usize>>,
}

impl SimilarityMatrix {
    pub fn compute(worlds: &[WorldSpec]) -> Self {
        let entries = worlds
            .iter()
            .map(|a| worlds.iter().map(|b| similarity(a, b)).collect())
            .collect();
        SimilarityMatrix { entries }
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.entries[i][j]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            self.entries[i].len() == n && (0..n).all(|j| self.entries[i][j] == self.entries[j][i])
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    MostSimilar,
    LeastSimilar,
    Mixed,
}

/// Picks `k` worlds from `pool` ranked by similarity to `target`. Ties go to
/// the smaller world id; `Mixed` alternates between the two ends of the
/// ranking, starting with the most similar.
pub fn select_worlds_by_similarity(
    target: &WorldSpec,
    pool: &[WorldSpec],
    k: usize,
    mode: SelectionMode,
) -> Result<Vec<WorldSpec>> {
    if k > pool.len() {
        return Err(Error::input(format!(
            "cannot select {k} worlds from a pool of {}",
            pool.len()
        )));
    }
    let scored: Vec<(usize, &WorldSpec)> =
        pool.iter().map(|w| (similarity(target, w), w)).collect();

    let mut most = scored.clone();
    most.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.world_id.cmp(&b.1.world_id)));
    let mut least = scored;
    least.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.world_id.cmp(&b.1.world_id)));

    let picked: Vec<&WorldSpec> = match mode {
        SelectionMode::MostSimilar => most.iter().take(k).map(|&(_, w)| w).collect(),
        SelectionMode::LeastSimilar => least.iter().take(k).map(|&(_, w)| w).collect(),
        SelectionMode::Mixed => {
            // pool entries are identified by position so duplicate ids cannot collide
            let pos = |w: &WorldSpec| pool.iter().position(|p| std::ptr::eq(p, w)).unwrap();
            let mut taken = vec![false; pool.len()];
            let mut out = Vec::with_capacity(k);
            let (mut hi, mut lo) = (most.iter(), least.iter());
            while out.len() < k {
                let side = if out.len() % 2 == 0 { &mut hi } else { &mut lo };
                for &(_, w) in side.by_ref() {
                    let p = pos(w);
                    if !taken[p] {
                        taken[p] = true;
                        out.push(w);
                        break;
                    }
                }
            }
            out
        }
    };
    Ok(picked.into_iter().cloned().collect())
}

/// Orders worlds from easiest to hardest: descending accuracy, ties by
/// world id.
pub fn order_curriculum(
    worlds: &[WorldSpec],
    scores: &BTreeMap<usize, f64>,
) -> Result<Vec<WorldSpec>> {
    let mut keyed = Vec::with_capacity(worlds.len());
    for w in worlds {
        let score = scores
            .get(&w.world_id)
            .copied()
            .ok_or_else(|| Error::input(format!("no score for world {}", w.world_id)))?;
        if score.is_nan() {
            return Err(Error::input(format!(
                "score for world {} is NaN",
                w.world_id
            )));
        }
        keyed.push((score, w));
    }
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.world_id.cmp(&b.1.world_id)));
    Ok(keyed.into_iter().map(|(_, w)| w.clone()).collect())
}
