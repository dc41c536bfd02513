//! Symbolic resolution of descriptors and instance graphs.
//!
//! The rule set is read as a grammar in Chomsky normal form: each rule
//! `[a, b] => c` is a production `c -> a b` and each relation is a terminal
//! for itself. A descriptor resolves to every relation that derives it.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::paths;
use crate::rules::{RelationId, RuleSet};
use crate::sampler::{Instance, WorldDataset};

/// CYK chart over one descriptor: `span(i, j)` holds the relations
/// derivable for positions `i..j`.
#[derive(Clone, Debug)]
pub struct ResolutionChart {
    len: usize,
    cells: Vec<BTreeSet<RelationId>>,
}

impl ResolutionChart {
    pub fn build(rules: &RuleSet, descriptor: &[RelationId]) -> Self {
        let n = descriptor.len();
        let mut chart = ResolutionChart {
            len: n,
            cells: vec![BTreeSet::new(); (n + 1) * (n + 1)],
        };
        for (i, &r) in descriptor.iter().enumerate() {
            let slot = chart.slot(i, i + 1);
            chart.cells[slot].insert(r);
        }
        for width in 2..=n {
            for start in 0..=n - width {
                let end = start + width;
                let mut acc = BTreeSet::new();
                for mid in start + 1..end {
                    let left = &chart.cells[chart.slot(start, mid)];
                    let right = &chart.cells[chart.slot(mid, end)];
                    for &a in left {
                        for &b in right {
                            if let Some(c) = rules.compose(a, b) {
                                acc.insert(c);
                            }
                        }
                    }
                }
                let slot = chart.slot(start, end);
                chart.cells[slot] = acc;
            }
        }
        chart
    }

    fn slot(&self, start: usize, end: usize) -> usize {
        start * (self.len + 1) + end
    }

    pub fn span(&self, start: usize, end: usize) -> &BTreeSet<RelationId> {
        assert!(
            start < end && end <= self.len,
            "span {start}..{end} outside 0..{}",
            self.len
        );
        &self.cells[self.slot(start, end)]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Relations derivable for the whole descriptor.
    pub fn full(&self) -> BTreeSet<RelationId> {
        if self.len == 0 {
            BTreeSet::new()
        } else {
            self.span(0, self.len).clone()
        }
    }
}

pub fn resolve_descriptor(rules: &RuleSet, descriptor: &[RelationId]) -> BTreeSet<RelationId> {
    ResolutionChart::build(rules, descriptor).full()
}

/// Longest descriptor [`brute_force_resolve`] accepts.
pub const BRUTE_FORCE_MAX_LEN: usize = 12;

enum Bracketing {
    Leaf(usize),
    Node(Rc<Bracketing>, Rc<Bracketing>),
}

fn bracketings(start: usize, end: usize) -> Vec<Rc<Bracketing>> {
    if end - start == 1 {
        return vec![Rc::new(Bracketing::Leaf(start))];
    }
    let mut out = Vec::new();
    for mid in start + 1..end {
        let rights = bracketings(mid, end);
        for left in bracketings(start, mid) {
            for right in &rights {
                out.push(Rc::new(Bracketing::Node(
                    Rc::clone(&left),
                    Rc::clone(right),
                )));
            }
        }
    }
    out
}

thread_local! {
    /// Bracketings of `0..n`, indexed by `n`, built on first use.
    static SHAPES: RefCell<Vec<Rc<Vec<Rc<Bracketing>>>>> = const { RefCell::new(Vec::new()) };
}

fn shapes(n: usize) -> Rc<Vec<Rc<Bracketing>>> {
    SHAPES.with(|cache| {
        let mut cache = cache.borrow_mut();
        while cache.len() <= n {
            let len = cache.len();
            cache.push(Rc::new(if len == 0 {
                Vec::new()
            } else {
                bracketings(0, len)
            }));
        }
        Rc::clone(&cache[n])
    })
}

fn fold(t: &Bracketing, rules: &RuleSet, d: &[RelationId]) -> Option<RelationId> {
    match t {
        Bracketing::Leaf(i) => Some(d[*i]),
        Bracketing::Node(l, r) => rules.compose(fold(l, rules, d)?, fold(r, rules, d)?),
    }
}

/// Enumerates every full binary bracketing of `descriptor` and folds each
/// through the rule table. Exponential; refuses descriptors longer than
/// [`BRUTE_FORCE_MAX_LEN`].
pub fn brute_force_resolve(
    rules: &RuleSet,
    descriptor: &[RelationId],
) -> Result<BTreeSet<RelationId>> {
    if descriptor.len() > BRUTE_FORCE_MAX_LEN {
        return Err(Error::input(format!(
            "brute-force resolution is limited to {BRUTE_FORCE_MAX_LEN} labels, got {}",
            descriptor.len()
        )));
    }
    if descriptor.is_empty() {
        return Ok(BTreeSet::new());
    }
    Ok(shapes(descriptor.len())
        .iter()
        .filter_map(|t| fold(t, rules, descriptor))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    /// Resolution of the instance's descriptor.
    pub resolved: BTreeSet<RelationId>,
    pub target_hit: bool,
    pub ambiguous: bool,
    /// The descriptor is what the resolution path's edges read.
    pub path_matches_descriptor: bool,
    /// No source-sink connection (ignoring direction) shorter than the
    /// descriptor, and no direct edge.
    pub shortcut_free: bool,
    /// Every directed source-to-sink path of descriptor length resolves to
    /// nothing or to the target only.
    pub path_consistent: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.target_hit
            && !self.ambiguous
            && self.path_matches_descriptor
            && self.shortcut_free
            && self.path_consistent
    }
}

fn path_reads_descriptor(inst: &Instance) -> bool {
    let p = &inst.resolution_path;
    if p.len() != inst.descriptor.len() + 1
        || p.first() != Some(&inst.source)
        || p.last() != Some(&inst.sink)
    {
        return false;
    }
    let mut distinct = p.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != p.len() {
        return false;
    }
    p.windows(2).zip(inst.descriptor.labels()).all(|(w, &r)| {
        inst.edges
            .iter()
            .any(|&(a, l, b)| a == w[0] && b == w[1] && l == r)
    })
}

pub fn validate_instance(rules: &RuleSet, inst: &Instance) -> ValidationReport {
    let resolved = resolve_descriptor(rules, inst.descriptor.labels());
    let target_hit = resolved.contains(&inst.target);
    let ambiguous = resolved.len() > 1;
    let path_matches_descriptor = path_reads_descriptor(inst);

    let len = inst.descriptor.len();
    let n = inst.node_count();
    let shortcut_free = len >= 2
        && (inst.source as usize) < n
        && (inst.sink as usize) < n
        && match paths::undirected_shortest_path(n, &inst.edges, inst.source, inst.sink) {
            Some(p) => p.len() >= len,
            None => true,
        };

    let mut path_consistent = true;
    if (inst.source as usize) < n && (inst.sink as usize) < n {
        let adj = inst.out_adjacency();
        paths::for_each_simple_path(
            &adj,
            inst.source,
            inst.sink,
            len,
            len,
            usize::MAX,
            |_, labels| {
                if path_consistent {
                    let res = resolve_descriptor(rules, labels);
                    if res.iter().any(|&r| r != inst.target) {
                        path_consistent = false;
                    }
                }
            },
        );
    }

    ValidationReport {
        resolved,
        target_hit,
        ambiguous,
        path_matches_descriptor,
        shortcut_free,
        path_consistent,
    }
}

/// Cap on paths examined per query by the baseline solver.
pub const SOLVER_PATH_CAP: usize = 100_000;

/// Predicts the relation between source and sink from every directed simple
/// path of at most `max_len` edges; the smallest relation any path resolves
/// to wins. `None` when nothing resolves.
pub fn predict(rules: &RuleSet, inst: &Instance, max_len: usize) -> Option<RelationId> {
    let n = inst.node_count();
    if inst.source as usize >= n || inst.sink as usize >= n {
        return None;
    }
    let adj = inst.out_adjacency();
    let mut best: Option<RelationId> = None;
    paths::for_each_simple_path(
        &adj,
        inst.source,
        inst.sink,
        1,
        max_len,
        SOLVER_PATH_CAP,
        |_, labels| {
            if let Some(&r) = resolve_descriptor(rules, labels).iter().next() {
                best = Some(best.map_or(r, |b| b.min(r)));
            }
        },
    );
    best
}

/// Fraction of instances whose target [`predict`] recovers; `None` for an
/// empty dataset.
pub fn symbolic_baseline_solve(
    rules: &RuleSet,
    dataset: &WorldDataset,
    max_len: usize,
) -> Option<f64> {
    use rayon::prelude::*;
    let all: Vec<&Instance> = dataset.instances().collect();
    if all.is_empty() {
        return None;
    }
    let correct = all
        .par_iter()
        .filter(|inst| predict(rules, inst, max_len) == Some(inst.target))
        .count();
    Some(correct as f64 / all.len() as f64)
}
