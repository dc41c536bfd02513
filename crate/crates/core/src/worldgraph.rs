//! World graphs: the labeled graph governing one world, grown by repeatedly
//! expanding an edge `(u, c, v)` into `u -a-> y -b-> v` using a world rule
//! `[a, b] => c`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::GenConfig;
use crate::error::{Error, Result};
use crate::partition::WorldSpec;
use crate::rules::{BinaryRule, RelationId, RuleSet};
use crate::seed::{self, stage};

pub type NodeId = u32;

/// Labeled directed graph with at most one edge per ordered node pair.
/// Nodes are the dense range `0..node_count`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WorldGraphDoc", into = "WorldGraphDoc")]
pub struct WorldGraph {
    nodes: usize,
    edges: BTreeMap<(NodeId, NodeId), RelationId>,
}

impl WorldGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_nodes(nodes: usize) -> Self {
        WorldGraph {
            nodes,
            edges: BTreeMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn remove(&mut self, u: NodeId, v: NodeId) {
        self.edges.remove(&(u, v));
    }

    fn truncate_nodes(&mut self, nodes: usize) {
        debug_assert!(self
            .edges
            .keys()
            .all(|&(u, v)| (u as usize) < nodes && (v as usize) < nodes));
        self.nodes = nodes;
    }

    /// Edge-induced subgraph over the weakly connected component of `seed`,
    /// with nodes renumbered densely in id order.
    fn component(&self, seed: NodeId) -> WorldGraph {
        let mut undirected = vec![Vec::new(); self.nodes];
        for (u, _, v) in self.edges() {
            undirected[u as usize].push(v);
            undirected[v as usize].push(u);
        }
        let mut seen = vec![false; self.nodes];
        seen[seed as usize] = true;
        let mut stack = vec![seed];
        while let Some(x) = stack.pop() {
            for &y in &undirected[x as usize] {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    stack.push(y);
                }
            }
        }
        let mut index = vec![NodeId::MAX; self.nodes];
        let mut next = 0;
        for (i, _) in seen.iter().enumerate().filter(|(_, &s)| s) {
            index[i] = next;
            next += 1;
        }
        let mut sub = WorldGraph::with_nodes(next as usize);
        for (u, r, v) in self.edges().filter(|&(u, _, _)| seen[u as usize]) {
            sub.edges.insert((index[u as usize], index[v as usize]), r);
        }
        sub
    }

    pub fn add_node(&mut self) -> NodeId {
        self.nodes += 1;
        (self.nodes - 1) as NodeId
    }

    /// Inserts `(u, r, v)`. An existing edge on the same ordered pair is left
    /// untouched and its label returned as the error.
    pub fn insert(
        &mut self,
        u: NodeId,
        r: RelationId,
        v: NodeId,
    ) -> std::result::Result<(), RelationId> {
        assert!(
            (u as usize) < self.nodes && (v as usize) < self.nodes,
            "edge endpoint out of range"
        );
        match self.edges.get(&(u, v)) {
            Some(&existing) => Err(existing),
            None => {
                self.edges.insert((u, v), r);
                Ok(())
            }
        }
    }

    pub fn label(&self, u: NodeId, v: NodeId) -> Option<RelationId> {
        self.edges.get(&(u, v)).copied()
    }

    /// Edges as `(u, r, v)` in `(u, v)` order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, RelationId, NodeId)> + '_ {
        self.edges.iter().map(|(&(u, v), &r)| (u, r, v))
    }

    /// Outgoing `(target, label)` lists, sorted by target.
    pub fn out_adjacency(&self) -> Vec<Vec<(NodeId, RelationId)>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for (u, r, v) in self.edges() {
            adj[u as usize].push((v, r));
        }
        adj
    }
}

#[derive(Serialize, Deserialize)]
struct WorldGraphDoc {
    nodes: usize,
    edges: Vec<(NodeId, RelationId, NodeId)>,
}

impl TryFrom<WorldGraphDoc> for WorldGraph {
    type Error = Error;

    fn try_from(doc: WorldGraphDoc) -> Result<Self> {
        let mut g = WorldGraph::with_nodes(doc.nodes);
        for (u, r, v) in doc.edges {
            if u as usize >= doc.nodes || v as usize >= doc.nodes {
                return Err(Error::input(format!(
                    "edge ({u}, {}, {v}) outside {} nodes",
                    r.0, doc.nodes
                )));
            }
            if g.insert(u, r, v).is_err() {
                return Err(Error::input(format!("duplicate edge on pair ({u}, {v})")));
            }
        }
        Ok(g)
    }
}

impl From<WorldGraph> for WorldGraphDoc {
    fn from(g: WorldGraph) -> Self {
        WorldGraphDoc {
            nodes: g.nodes,
            edges: g.edges().collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceEvent {
    /// A fresh edge between two fresh nodes.
    Seed {
        u: NodeId,
        relation: RelationId,
        v: NodeId,
    },
    /// Edge `(u, rule.head, v)` expanded through fresh node `via`.
    Expand {
        u: NodeId,
        v: NodeId,
        via: NodeId,
        rule: BinaryRule,
        /// Position of `rule` in the world's rule list.
        rule_index: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub events: Vec<TraceEvent>,
    /// Times each world rule was applied, by position in the world's rule list.
    pub rule_uses: Vec<usize>,
    pub cycles_completed: usize,
    pub hit_edge_cap: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedWorld {
    pub graph: WorldGraph,
    pub trace: GenerationTrace,
}

/// Grows one world graph from the world's slice of the master rule list.
///
/// Each cycle picks `steps` in `[2, max_expansions]`. The first step seeds the
/// cycle with a fresh edge or, with probability one half, an existing
/// expandable edge. A fresh edge is labeled with the head of a rule drawn
/// under the current weights, so rules not yet used this round are favoured;
/// later steps expand an edge added during the cycle. A rule is drawn among
/// those with the edge's label as head, in proportion to a weight that decays
/// by `gamma` per use. Once every world rule has been used in the current
/// round, the round counts as a completed cycle and weights reset.
///
/// A cycle whose edges make [`closure_check`] fail on the touched component
/// is rolled back and redrawn, up to [`MAX_CYCLE_ROLLBACKS`] times in a row;
/// past that the cycle is kept and the caller's regeneration loop decides.
///
/// Stops when the node pool is spent and the required cycles are complete,
/// or when the graph reaches `50 * w` edges.
pub fn generate_world_graph<R: Rng + ?Sized>(
    world: &WorldSpec,
    master: &RuleSet,
    cfg: &GenConfig,
    rng: &mut R,
) -> Result<GeneratedWorld> {
    let rules = master.subset(&world.rule_indices)?;
    if rules.is_empty() {
        return Err(Error::degenerate(world.world_id, "world has no rules"));
    }
    let mut by_head: HashMap<RelationId, Vec<usize>> = HashMap::new();
    for (i, r) in rules.rules().iter().enumerate() {
        by_head.entry(r.head).or_default().push(i);
    }

    let n_rules = rules.len();
    let all_rules: Vec<usize> = (0..n_rules).collect();
    let edge_cap = 50 * world.rule_indices.len();
    let mut weights = vec![1.0f64; n_rules];
    let mut used_this_round = vec![false; n_rules];
    let mut trace = GenerationTrace {
        rule_uses: vec![0; n_rules],
        ..Default::default()
    };
    let mut graph = WorldGraph::new();
    let mut expandable: Vec<(NodeId, RelationId, NodeId)> = Vec::new();

    let add_edge = |graph: &mut WorldGraph, expandable: &mut Vec<_>, u, r, v| {
        graph
            .insert(u, r, v)
            .expect("fresh node pairs are never occupied");
        if by_head.contains_key(&r) {
            expandable.push((u, r, v));
        }
    };

    let mut rollbacks = 0;
    loop {
        if graph.node_count() >= cfg.node_pool && trace.cycles_completed >= cfg.cycles {
            break;
        }
        let steps = rng.random_range(2..=cfg.max_expansions);
        let mut cycle_edges: Vec<(NodeId, RelationId, NodeId)> = Vec::new();
        let undo = Checkpoint {
            nodes: graph.node_count(),
            expandable: expandable.len(),
            events: trace.events.len(),
            weights: weights.clone(),
            used: used_this_round.clone(),
            uses: trace.rule_uses.clone(),
        };
        let mut cap_hit = false;
        let mut seeded_fresh = false;
        for step in 0..steps {
            if graph.edge_count() >= edge_cap {
                cap_hit = true;
                break;
            }
            let (u, target, v) = if step == 0 {
                if expandable.is_empty() || rng.random_bool(0.5) {
                    let relation = rules.rules()[weighted_pick(&all_rules, &weights, rng)].head;
                    let u = graph.add_node();
                    let v = graph.add_node();
                    add_edge(&mut graph, &mut expandable, u, relation, v);
                    trace.events.push(TraceEvent::Seed { u, relation, v });
                    seeded_fresh = true;
                    (u, relation, v)
                } else {
                    expandable[rng.random_range(0..expandable.len())]
                }
            } else {
                let open: Vec<_> = cycle_edges
                    .iter()
                    .filter(|e| by_head.contains_key(&e.1))
                    .collect();
                if open.is_empty() {
                    break;
                }
                *open[rng.random_range(0..open.len())]
            };
            if step == 0 {
                cycle_edges.push((u, target, v));
            }

            let candidates = &by_head[&target];
            let rule_index = weighted_pick(candidates, &weights, rng);
            let rule = rules.rules()[rule_index];
            weights[rule_index] *= cfg.gamma;
            used_this_round[rule_index] = true;
            trace.rule_uses[rule_index] += 1;

            let via = graph.add_node();
            add_edge(&mut graph, &mut expandable, u, rule.body[0], via);
            add_edge(&mut graph, &mut expandable, via, rule.body[1], v);
            cycle_edges.push((u, rule.body[0], via));
            cycle_edges.push((via, rule.body[1], v));
            trace.events.push(TraceEvent::Expand {
                u,
                v,
                via,
                rule,
                rule_index,
            });
        }
        if let Some(&(anchor, _, _)) = cycle_edges.first() {
            if rollbacks < MAX_CYCLE_ROLLBACKS
                && !closure_check(&graph.component(anchor), &rules).is_empty()
            {
                rollbacks += 1;
                // an existing seed edge stays; everything else was added this cycle
                let first_added = usize::from(!seeded_fresh);
                for &(u, _, v) in &cycle_edges[first_added..] {
                    graph.remove(u, v);
                }
                graph.truncate_nodes(undo.nodes);
                expandable.truncate(undo.expandable);
                trace.events.truncate(undo.events);
                weights = undo.weights;
                used_this_round = undo.used;
                trace.rule_uses = undo.uses;
                continue;
            }
        }
        rollbacks = 0;
        if cap_hit {
            trace.hit_edge_cap = true;
            break;
        }
        if used_this_round.iter().all(|&u| u) {
            trace.cycles_completed += 1;
            weights.iter_mut().for_each(|w| *w = 1.0);
            used_this_round.iter_mut().for_each(|u| *u = false);
        }
    }

    Ok(GeneratedWorld { graph, trace })
}

/// Consecutive cycles that may be rolled back for closure conflicts.
pub const MAX_CYCLE_ROLLBACKS: usize = 50;

struct Checkpoint {
    nodes: usize,
    expandable: usize,
    events: usize,
    weights: Vec<f64>,
    used: Vec<bool>,
    uses: Vec<usize>,
}

fn weighted_pick<R: Rng + ?Sized>(candidates: &[usize], weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = candidates.iter().map(|&i| weights[i]).sum();
    let mut x = rng.random::<f64>() * total;
    for &i in candidates {
        x -= weights[i];
        if x < 0.0 {
            return i;
        }
    }
    *candidates.last().expect("at least one candidate rule")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosureDiagnostic {
    /// Forward chaining derives `derived` on a pair already labeled `existing`.
    Conflict {
        u: NodeId,
        v: NodeId,
        existing: RelationId,
        derived: RelationId,
    },
    /// An unlabeled pair derives more than one relation.
    Ambiguous {
        u: NodeId,
        v: NodeId,
        derived: Vec<RelationId>,
    },
}

/// Forward-chains `rules` over `g` to a fixpoint and reports pairs whose
/// derived labels disagree with the edge label or with each other.
pub fn closure_check(g: &WorldGraph, rules: &RuleSet) -> Vec<ClosureDiagnostic> {
    let n = g.node_count();
    let mut facts: HashSet<(NodeId, RelationId, NodeId)> = HashSet::new();
    let mut out: Vec<Vec<(RelationId, NodeId)>> = vec![Vec::new(); n];
    let mut inc: Vec<Vec<(NodeId, RelationId)>> = vec![Vec::new(); n];
    let mut queue: Vec<(NodeId, RelationId, NodeId)> = Vec::new();

    let push = |fact: (NodeId, RelationId, NodeId),
                facts: &mut HashSet<_>,
                out: &mut Vec<Vec<_>>,
                inc: &mut Vec<Vec<_>>,
                queue: &mut Vec<_>| {
        if facts.insert(fact) {
            let (u, r, v) = fact;
            out[u as usize].push((r, v));
            inc[v as usize].push((u, r));
            queue.push(fact);
        }
    };

    for e in g.edges() {
        push(e, &mut facts, &mut out, &mut inc, &mut queue);
    }
    while let Some((x, a, y)) = queue.pop() {
        let mut fresh = Vec::new();
        for &(b, z) in &out[y as usize] {
            if let Some(c) = rules.compose(a, b) {
                fresh.push((x, c, z));
            }
        }
        for &(w, b) in &inc[x as usize] {
            if let Some(c) = rules.compose(b, a) {
                fresh.push((w, c, y));
            }
        }
        for f in fresh {
            push(f, &mut facts, &mut out, &mut inc, &mut queue);
        }
    }

    let mut by_pair: BTreeMap<(NodeId, NodeId), BTreeSet<RelationId>> = BTreeMap::new();
    for (u, r, v) in facts {
        by_pair.entry((u, v)).or_default().insert(r);
    }
    let mut diags = Vec::new();
    for ((u, v), labels) in by_pair {
        match g.label(u, v) {
            Some(existing) => {
                for &derived in labels.iter().filter(|&&r| r != existing) {
                    diags.push(ClosureDiagnostic::Conflict {
                        u,
                        v,
                        existing,
                        derived,
                    });
                }
            }
            None if labels.len() > 1 => diags.push(ClosureDiagnostic::Ambiguous {
                u,
                v,
                derived: labels.into_iter().collect(),
            }),
            None => {}
        }
    }
    diags
}

/// Attempts allowed before a world with closure conflicts is abandoned.
pub const MAX_WORLD_ATTEMPTS: usize = 5;

/// Generates a world graph from the sub-seed for `(master_seed, world_id,
/// attempt)`, regenerating with the next attempt index while
/// [`closure_check`] reports conflicts.
pub fn generate_closed_world_graph(
    world: &WorldSpec,
    master: &RuleSet,
    cfg: &GenConfig,
    master_seed: u64,
) -> Result<(GeneratedWorld, usize)> {
    let rules = master.subset(&world.rule_indices)?;
    let mut last_conflicts = 0;
    for attempt in 0..MAX_WORLD_ATTEMPTS {
        let mut rng = seed::rng_for(
            master_seed,
            &[stage::WORLD_GRAPH, world.world_id as u64, attempt as u64],
        );
        let generated = generate_world_graph(world, master, cfg, &mut rng)?;
        let diags = closure_check(&generated.graph, &rules);
        if diags.is_empty() {
            return Ok((generated, attempt));
        }
        log::debug!(
            "world {}: attempt {attempt} has {} closure conflicts, regenerating",
            world.world_id,
            diags.len()
        );
        last_conflicts = diags.len();
    }
    Err(Error::ClosureConflict {
        world_id: world.world_id,
        attempts: MAX_WORLD_ATTEMPTS,
        conflicts: last_conflicts,
    })
}
