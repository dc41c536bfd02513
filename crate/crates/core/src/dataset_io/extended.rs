//! Edge-node expansion of a labeled graph: every labeled edge `(u, r, v)`
//! becomes a node carrying `r`, linked to `u` and to `v`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::rules::RelationId;
use crate::sampler::Edge;
use crate::worldgraph::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeNode {
    pub id: NodeId,
    pub relation: RelationId,
    pub source: NodeId,
    pub target: NodeId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendedGraph {
    /// Original node ids, ascending.
    pub nodes: Vec<NodeId>,
    /// One per original edge, in input order, ids following the largest
    /// original id.
    pub edge_nodes: Vec<EdgeNode>,
    /// Unlabeled, undirected links `(original, edge-node)`.
    pub links: Vec<(NodeId, NodeId)>,
}

impl ExtendedGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len() + self.edge_nodes.len()
    }

    /// Number of links touching `id`.
    pub fn degree(&self, id: NodeId) -> usize {
        self.links
            .iter()
            .filter(|&&(a, b)| a == id || b == id)
            .count()
    }
}

pub fn extend_graph(edges: &[Edge]) -> ExtendedGraph {
    let nodes: BTreeSet<NodeId> = edges.iter().flat_map(|&(u, _, v)| [u, v]).collect();
    let first_free = nodes.last().map_or(0, |&m| m + 1);
    let mut out = ExtendedGraph {
        nodes: nodes.into_iter().collect(),
        ..Default::default()
    };
    for (i, &(u, r, v)) in edges.iter().enumerate() {
        let id = first_free + i as NodeId;
        out.edge_nodes.push(EdgeNode {
            id,
            relation: r,
            source: u,
            target: v,
        });
        out.links.push((u, id));
        out.links.push((v, id));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let g = extend_graph(&[(0, RelationId(5), 1)]);
        assert_eq!(g.nodes, vec![0, 1]);
        assert_eq!(
            g.edge_nodes,
            vec![EdgeNode {
                id: 2,
                relation: RelationId(5),
                source: 0,
                target: 1
            }]
        );
        assert_eq!(g.links, vec![(0, 2), (1, 2)]);
        assert_eq!(g.node_count(), 3);
    }

    #[test]
    fn empty_graph_stays_empty() {
        assert_eq!(extend_graph(&[]), ExtendedGraph::default());
    }

    #[test]
    fn antiparallel_edges_get_separate_edge_nodes() {
        let g = extend_graph(&[(0, RelationId(0), 1), (1, RelationId(1), 0)]);
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.links.len(), 4);
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.degree(2), 2);
    }
}
