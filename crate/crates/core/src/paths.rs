//! Simple-path enumeration and unlabeled distances over small labeled graphs.

use std::collections::VecDeque;

use crate::rules::RelationId;
use crate::worldgraph::NodeId;

/// Directed adjacency: `adj[u]` lists `(v, label)` in a fixed order.
pub type Adjacency = [Vec<(NodeId, RelationId)>];

/// Directed hop distance from every node to `target`, `usize::MAX` when
/// unreachable.
pub fn distances_to(adj: &Adjacency, target: NodeId) -> Vec<usize> {
    let n = adj.len();
    let mut rev = vec![Vec::new(); n];
    for (u, outs) in adj.iter().enumerate() {
        for &(v, _) in outs {
            rev[v as usize].push(u as NodeId);
        }
    }
    let mut dist = vec![usize::MAX; n];
    dist[target as usize] = 0;
    let mut queue = VecDeque::from([target]);
    while let Some(x) = queue.pop_front() {
        for &p in &rev[x as usize] {
            if dist[p as usize] == usize::MAX {
                dist[p as usize] = dist[x as usize] + 1;
                queue.push_back(p);
            }
        }
    }
    dist
}

/// Calls `visit(nodes, labels)` for each directed simple path `from -> to`
/// with `min_len..=max_len` edges, in depth-first order over `adj`, stopping
/// after `cap` paths. Returns `true` if the cap cut enumeration short.
pub fn for_each_simple_path(
    adj: &Adjacency,
    from: NodeId,
    to: NodeId,
    min_len: usize,
    max_len: usize,
    cap: usize,
    mut visit: impl FnMut(&[NodeId], &[RelationId]),
) -> bool {
    if from == to {
        return false;
    }
    let dist = distances_to(adj, to);
    if dist[from as usize] > max_len {
        return false;
    }
    let mut on_path = vec![false; adj.len()];
    let mut nodes = vec![from];
    let mut labels: Vec<RelationId> = Vec::new();
    let mut cursor: Vec<usize> = vec![0];
    let mut found = 0usize;
    on_path[from as usize] = true;

    while let Some(&top) = nodes.last() {
        let depth = cursor.len() - 1;
        let i = cursor[depth];
        let outs = &adj[top as usize];
        if i >= outs.len() {
            on_path[top as usize] = false;
            nodes.pop();
            labels.pop();
            cursor.pop();
            continue;
        }
        cursor[depth] += 1;
        let (next, label) = outs[i];
        let len = labels.len() + 1;
        if on_path[next as usize]
            || dist[next as usize] == usize::MAX
            || len + dist[next as usize] > max_len
        {
            continue;
        }
        if next == to {
            if len >= min_len {
                labels.push(label);
                nodes.push(next);
                visit(&nodes, &labels);
                nodes.pop();
                labels.pop();
                found += 1;
                if found >= cap {
                    return true;
                }
            }
            continue;
        }
        on_path[next as usize] = true;
        nodes.push(next);
        labels.push(label);
        cursor.push(0);
    }
    false
}

/// Unlabeled, direction-agnostic shortest path between `from` and `to` over
/// `edges`, as a list of edge indices. `None` when disconnected.
pub fn undirected_shortest_path(
    node_count: usize,
    edges: &[(NodeId, RelationId, NodeId)],
    from: NodeId,
    to: NodeId,
) -> Option<Vec<usize>> {
    let mut adj: Vec<Vec<(NodeId, usize)>> = vec![Vec::new(); node_count];
    for (i, &(u, _, v)) in edges.iter().enumerate() {
        adj[u as usize].push((v, i));
        adj[v as usize].push((u, i));
    }
    let mut parent: Vec<Option<(NodeId, usize)>> = vec![None; node_count];
    let mut seen = vec![false; node_count];
    seen[from as usize] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(x) = queue.pop_front() {
        if x == to {
            break;
        }
        for &(y, e) in &adj[x as usize] {
            if !seen[y as usize] {
                seen[y as usize] = true;
                parent[y as usize] = Some((x, e));
                queue.push_back(y);
            }
        }
    }
    if !seen[to as usize] {
        return None;
    }
    let mut path = Vec::new();
    let mut at = to;
    while at != from {
        let (p, e) = parent[at as usize].expect("BFS tree reaches back to the source");
        path.push(e);
        at = p;
    }
    path.reverse();
    Some(path)
}
