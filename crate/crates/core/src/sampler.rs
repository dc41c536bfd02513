//! Query-graph sampling from a world graph.
//!
//! Every edge `(u, r, v)` of the world graph with an alternate walk
//! `u -> ... -> v` yields a descriptor: the walk's label sequence. Descriptors
//! (not instances) are partitioned into train/valid/test so that evaluation
//! descriptors are never seen in training. An instance is the resolution walk
//! plus BFS neighbourhood noise, with the direct edge and any shortcut pruned.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{GenConfig, Split, SplitFractions};
use crate::error::{Error, Result};
use crate::paths;
use crate::resolver;
use crate::rules::{RelationId, RuleSet};
use crate::seed::{self, stage};
use crate::worldgraph::{NodeId, WorldGraph};

pub type Edge = (NodeId, RelationId, NodeId);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Descriptor(pub Vec<RelationId>);

impl Descriptor {
    pub fn labels(&self) -> &[RelationId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.0.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// A world-graph edge with one alternate walk between its endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescriptorPair {
    pub edge: Edge,
    pub descriptor: Descriptor,
    /// First walk (in depth-first order) carrying `descriptor`.
    pub path: Vec<NodeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DescriptorCollection {
    pub pairs: Vec<DescriptorPair>,
    /// Edges whose walk enumeration hit the per-edge cap.
    pub truncated_edges: usize,
}

/// Enumerates, for every edge of `g`, the simple walks between its endpoints
/// with `2..=max_len` edges, keeping one pair per distinct `(edge,
/// descriptor)`.
pub fn collect_descriptors(
    g: &WorldGraph,
    max_len: usize,
    max_walks_per_edge: usize,
) -> Result<DescriptorCollection> {
    if max_len < 2 {
        return Err(Error::input(format!(
            "maximum resolution length must be >= 2, got {max_len}"
        )));
    }
    let adj = g.out_adjacency();
    let mut out = DescriptorCollection::default();
    for edge @ (u, _, v) in g.edges() {
        let mut seen: HashSet<Vec<RelationId>> = HashSet::new();
        let truncated = paths::for_each_simple_path(
            &adj,
            u,
            v,
            2,
            max_len,
            max_walks_per_edge,
            |nodes, labels| {
                if seen.insert(labels.to_vec()) {
                    out.pairs.push(DescriptorPair {
                        edge,
                        descriptor: Descriptor(labels.to_vec()),
                        path: nodes.to_vec(),
                    });
                }
            },
        );
        if truncated {
            out.truncated_edges += 1;
        }
    }
    Ok(out)
}

/// Descriptor -> split assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DescriptorSplit {
    pub assignment: BTreeMap<Descriptor, Split>,
}

impl DescriptorSplit {
    pub fn split_of(&self, d: &Descriptor) -> Option<Split> {
        self.assignment.get(d).copied()
    }

    pub fn descriptors(&self, split: Split) -> impl Iterator<Item = &Descriptor> {
        self.assignment
            .iter()
            .filter(move |(_, &s)| s == split)
            .map(|(d, _)| d)
    }

    pub fn count(&self, split: Split) -> usize {
        self.descriptors(split).count()
    }
}

/// Largest-remainder apportionment of `n` items, then topped up so no split
/// is left empty (needs `n >= 3`).
pub fn apportion(n: usize, fractions: &SplitFractions) -> [usize; 3] {
    let f = fractions.as_array();
    let quotas: Vec<f64> = f.iter().map(|x| x * n as f64).collect();
    let mut counts = [0usize; 3];
    for i in 0..3 {
        counts[i] = quotas[i].floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = n.saturating_sub(counts.iter().sum());
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    if n >= 3 {
        while let Some(empty) = (0..3).find(|&i| counts[i] == 0) {
            let donor = (0..3)
                .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
                .unwrap();
            counts[donor] -= 1;
            counts[empty] += 1;
        }
    }
    counts
}

/// Partitions the distinct descriptors among `pairs` into three disjoint
/// splits of sizes given by [`apportion`].
pub fn split_descriptors<R: Rng + ?Sized>(
    world_id: usize,
    pairs: &[DescriptorPair],
    fractions: &SplitFractions,
    rng: &mut R,
) -> Result<DescriptorSplit> {
    fractions.validate()?;
    let distinct: BTreeSet<&Descriptor> = pairs.iter().map(|p| &p.descriptor).collect();
    if distinct.len() < 3 {
        return Err(Error::degenerate(
            world_id,
            format!(
                "{} distinct descriptors cannot populate three splits",
                distinct.len()
            ),
        ));
    }
    let mut ordered: Vec<&Descriptor> = distinct.into_iter().collect();
    ordered.shuffle(rng);
    let counts = apportion(ordered.len(), fractions);
    let mut assignment = BTreeMap::new();
    let mut it = ordered.into_iter();
    for split in Split::ALL {
        for d in it.by_ref().take(counts[split.index()]) {
            assignment.insert(d.clone(), split);
        }
    }
    Ok(DescriptorSplit { assignment })
}

/// One query: predict the relation between `source` and `sink` in `edges`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub world_id: usize,
    pub split: Split,
    /// Sorted by `(u, v)`.
    pub edges: Vec<Edge>,
    pub source: NodeId,
    pub sink: NodeId,
    pub target: RelationId,
    pub resolution_path: Vec<NodeId>,
    pub descriptor: Descriptor,
}

impl Instance {
    /// Nodes are dense, so this is one past the largest id in use.
    pub fn node_count(&self) -> usize {
        self.edges
            .iter()
            .flat_map(|&(u, _, v)| [u, v])
            .chain(self.resolution_path.iter().copied())
            .max()
            .map_or(0, |m| m as usize + 1)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_adjacency(&self) -> Vec<Vec<(NodeId, RelationId)>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for &(u, r, v) in &self.edges {
            adj[u as usize].push((v, r));
        }
        adj
    }
}

/// Undirected view of a world graph, reused across instance draws.
pub struct SamplingContext<'g> {
    graph: &'g WorldGraph,
    neighbours: Vec<Vec<(NodeId, Edge)>>,
}

impl<'g> SamplingContext<'g> {
    pub fn new(graph: &'g WorldGraph) -> Self {
        let mut neighbours = vec![Vec::new(); graph.node_count()];
        for e @ (u, _, v) in graph.edges() {
            neighbours[u as usize].push((v, e));
            neighbours[v as usize].push((u, e));
        }
        SamplingContext { graph, neighbours }
    }

    pub fn graph(&self) -> &WorldGraph {
        self.graph
    }
}

/// Builds one instance around `pair`'s walk.
///
/// For each walk node a BFS over the world graph (ignoring direction) keeps
/// each newly reached edge at depth `d` with probability `noise_gamma^d`, up
/// to `noise_depth`. The direct edge is then removed, and while the source
/// and sink are closer than the walk length the most recently added noise
/// edge on a shortest connecting path is deleted. Walk edges are never
/// deleted. Node ids are shuffled into a dense range.
pub fn sample_instance<R: Rng + ?Sized>(
    ctx: &SamplingContext<'_>,
    pair: &DescriptorPair,
    cfg: &GenConfig,
    world_id: usize,
    split: Split,
    rng: &mut R,
) -> Instance {
    let (u, target, v) = pair.edge;
    let walk_len = pair.descriptor.len();

    let mut edges: Vec<Edge> = pair
        .path
        .windows(2)
        .zip(pair.descriptor.labels())
        .map(|(w, &r)| (w[0], r, w[1]))
        .collect();
    let protected = edges.len();
    let mut present: HashSet<(NodeId, NodeId)> = edges.iter().map(|&(a, _, b)| (a, b)).collect();

    if cfg.noise_gamma > 0.0 {
        for &start in &pair.path {
            let mut visited: HashSet<NodeId> = HashSet::from([start]);
            let mut frontier = vec![start];
            for depth in 1..=cfg.noise_depth {
                let keep = cfg.noise_gamma.powi(depth as i32);
                let mut next = Vec::new();
                for &node in &frontier {
                    for &(nbr, e @ (a, _, b)) in &ctx.neighbours[node as usize] {
                        if present.contains(&(a, b)) {
                            continue;
                        }
                        if rng.random_bool(keep) {
                            present.insert((a, b));
                            edges.push(e);
                            if visited.insert(nbr) {
                                next.push(nbr);
                            }
                        }
                    }
                }
                frontier = next;
            }
        }
    }

    edges.retain(|&(a, _, b)| (a, b) != (u, v));
    let node_bound = ctx.graph.node_count();
    while let Some(short) = paths::undirected_shortest_path(node_bound, &edges, u, v) {
        if short.len() >= walk_len {
            break;
        }
        let newest = short
            .into_iter()
            .filter(|&i| i >= protected)
            .max()
            .expect("a path shorter than the walk must use a noise edge");
        edges.remove(newest);
    }

    // dense relabelling: walk nodes first, then first appearance order
    let mut order: Vec<NodeId> = Vec::new();
    let mut index: HashMap<NodeId, usize> = HashMap::new();
    for &n in pair
        .path
        .iter()
        .chain(edges.iter().flat_map(|(a, _, b)| [a, b]))
    {
        index.entry(n).or_insert_with(|| {
            order.push(n);
            order.len() - 1
        });
    }
    let mut fresh: Vec<NodeId> = (0..order.len() as NodeId).collect();
    fresh.shuffle(rng);
    let map = |n: NodeId| fresh[index[&n]];

    let mut inst_edges: Vec<Edge> = edges.iter().map(|&(a, r, b)| (map(a), r, map(b))).collect();
    inst_edges.sort_unstable_by_key(|&(a, r, b)| (a, b, r));

    Instance {
        world_id,
        split,
        edges: inst_edges,
        source: map(u),
        sink: map(v),
        target,
        resolution_path: pair.path.iter().map(|&n| map(n)).collect(),
        descriptor: pair.descriptor.clone(),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WorldDataset {
    pub world_id: usize,
    pub train: Vec<Instance>,
    pub valid: Vec<Instance>,
    pub test: Vec<Instance>,
}

impl WorldDataset {
    pub fn split(&self, split: Split) -> &[Instance] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn split_mut(&mut self, split: Split) -> &mut Vec<Instance> {
        match split {
            Split::Train => &mut self.train,
            Split::Valid => &mut self.valid,
            Split::Test => &mut self.test,
        }
    }

    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn descriptor_set(&self, split: Split) -> BTreeSet<&Descriptor> {
        self.split(split).iter().map(|i| &i.descriptor).collect()
    }
}

/// Bookkeeping from [`build_dataset`], kept alongside the world in the
/// suite manifest.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingReport {
    /// Distinct descriptors found in the world graph.
    pub descriptors_found: usize,
    /// Distinct descriptors whose resolution is exactly their edge label.
    pub descriptors_usable: usize,
    /// Distinct descriptors deriving more than one relation.
    pub descriptors_ambiguous: usize,
    /// Distinct descriptors deriving nothing.
    pub descriptors_unresolvable: usize,
    /// Descriptor pool sizes for train / valid / test.
    pub pool_sizes: [usize; 3],
    pub truncated_edges: usize,
    /// Instance draws rejected by validation and redrawn.
    pub resampled: usize,
}

impl SamplingReport {
    pub fn ambiguity_rate(&self) -> f64 {
        if self.descriptors_found == 0 {
            0.0
        } else {
            self.descriptors_ambiguous as f64 / self.descriptors_found as f64
        }
    }
}

/// Draws per instance before a split gives up.
pub const MAX_INSTANCE_ATTEMPTS: usize = 32;

/// Samples a full per-world dataset.
///
/// Only descriptors whose resolution under the world rules is exactly the
/// label of the edge they were read from are kept. Instances for each split
/// draw descriptors uniformly (with replacement) from that split's pool; a
/// draw failing [`resolver::validate_instance`] is redrawn with the next
/// attempt seed.
pub fn build_dataset(
    world_id: usize,
    g: &WorldGraph,
    rules: &RuleSet,
    cfg: &GenConfig,
    master_seed: u64,
) -> Result<(WorldDataset, SamplingReport)> {
    let collection = collect_descriptors(g, cfg.max_walk_len, cfg.max_walks_per_edge)?;
    let mut report = SamplingReport {
        truncated_edges: collection.truncated_edges,
        ..Default::default()
    };

    let mut resolution: HashMap<&Descriptor, BTreeSet<RelationId>> = HashMap::new();
    for p in &collection.pairs {
        resolution
            .entry(&p.descriptor)
            .or_insert_with(|| resolver::resolve_descriptor(rules, p.descriptor.labels()));
    }
    report.descriptors_found = resolution.len();
    report.descriptors_ambiguous = resolution.values().filter(|s| s.len() > 1).count();
    report.descriptors_unresolvable = resolution.values().filter(|s| s.is_empty()).count();

    let usable: Vec<DescriptorPair> = collection
        .pairs
        .iter()
        .filter(|p| {
            let res = &resolution[&p.descriptor];
            res.len() == 1 && res.contains(&p.edge.1)
        })
        .cloned()
        .collect();
    report.descriptors_usable = usable
        .iter()
        .map(|p| &p.descriptor)
        .collect::<BTreeSet<_>>()
        .len();

    let mut split_rng = seed::rng_for(master_seed, &[stage::DESCRIPTOR_SPLIT, world_id as u64]);
    let split = split_descriptors(world_id, &usable, &cfg.descriptor_split, &mut split_rng)?;

    let mut pools: [Vec<&DescriptorPair>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for p in &usable {
        let s = split
            .split_of(&p.descriptor)
            .expect("every usable descriptor is assigned");
        pools[s.index()].push(p);
    }
    for s in Split::ALL {
        report.pool_sizes[s.index()] = pools[s.index()].len();
        if pools[s.index()].is_empty() && cfg.graphs_per_split.get(s) > 0 {
            return Err(Error::degenerate(
                world_id,
                format!("{s} descriptor pool is empty"),
            ));
        }
    }

    let ctx = SamplingContext::new(g);
    let mut dataset = WorldDataset {
        world_id,
        ..Default::default()
    };
    for s in Split::ALL {
        let pool = &pools[s.index()];
        let drawn: Vec<Result<(Instance, usize)>> = (0..cfg.graphs_per_split.get(s))
            .into_par_iter()
            .map(|idx| {
                for attempt in 0..MAX_INSTANCE_ATTEMPTS {
                    let mut rng = seed::rng_for(
                        master_seed,
                        &[
                            stage::INSTANCE,
                            world_id as u64,
                            s.index() as u64,
                            idx as u64,
                            attempt as u64,
                        ],
                    );
                    let pair = pool[rng.random_range(0..pool.len())];
                    let inst = sample_instance(&ctx, pair, cfg, world_id, s, &mut rng);
                    if resolver::validate_instance(rules, &inst).is_valid() {
                        return Ok((inst, attempt));
                    }
                }
                Err(Error::SamplingExhausted {
                    world_id,
                    split: s.to_string(),
                    attempts: MAX_INSTANCE_ATTEMPTS,
                })
            })
            .collect();
        let out = dataset.split_mut(s);
        for d in drawn {
            let (inst, retries) = d?;
            report.resampled += retries;
            out.push(inst);
        }
    }
    Ok((dataset, report))
}
