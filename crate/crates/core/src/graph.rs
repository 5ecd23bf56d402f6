//! Directed road graph and the minimax (bottleneck) path oracle.
//!
//! The bottleneck of a path is its heaviest edge. [`minimax_path`] returns a
//! source-to-target path whose bottleneck is as light as possible, using a
//! Dijkstra search where the label of a node is the largest weight seen on the
//! best path to it instead of the sum.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

/// Edge index, which doubles as the base-arm identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("no path from node {from} to node {to}")]
    NoPath { from: NodeId, to: NodeId },
    #[error("node {node} out of range for a graph with {node_count} nodes")]
    NodeOutOfRange { node: NodeId, node_count: usize },
    #[error("edge length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("weight assignment has {got} values but the graph has {expected} edges")]
    WeightCountMismatch { expected: usize, got: usize },
    #[error("weight of edge {0} is NaN")]
    NanWeight(EdgeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
}

/// Directed multigraph with dense node and edge indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    node_count: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<EdgeId>>,
}

impl DirectedGraph {
    pub fn new(node_count: usize) -> Self {
        Self {
            node_count,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); node_count],
        }
    }

    pub fn add_edge(&mut self, from: NodeId, to: NodeId, length_m: f64) -> Result<EdgeId, GraphError> {
        self.check_node(from)?;
        self.check_node(to)?;
        if !(length_m > 0.0 && length_m.is_finite()) {
            return Err(GraphError::InvalidLength(length_m));
        }
        let id = EdgeId(self.edges.len());
        self.edges.push(Edge { id, from, to, length_m });
        self.adjacency[from.0].push(id);
        Ok(id)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn outgoing(&self, node: NodeId) -> &[EdgeId] {
        &self.adjacency[node.0]
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        node.0 < self.node_count
    }

    fn check_node(&self, node: NodeId) -> Result<(), GraphError> {
        if self.contains_node(node) {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange { node, node_count: self.node_count })
        }
    }

    /// Plain BFS reachability, ignoring weights.
    pub fn is_reachable(&self, source: NodeId, target: NodeId) -> bool {
        if !self.contains_node(source) || !self.contains_node(target) {
            return false;
        }
        let mut seen = vec![false; self.node_count];
        let mut queue = std::collections::VecDeque::from([source]);
        seen[source.0] = true;
        while let Some(u) = queue.pop_front() {
            if u == target {
                return true;
            }
            for &e in self.outgoing(u) {
                let v = self.edges[e.0].to;
                if !seen[v.0] {
                    seen[v.0] = true;
                    queue.push_back(v);
                }
            }
        }
        false
    }
}

/// One real value per edge, indexed by `EdgeId`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightAssignment(Vec<f64>);

impl WeightAssignment {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn from_fn(graph: &DirectedGraph, f: impl FnMut(EdgeId) -> f64) -> Self {
        Self((0..graph.edge_count()).map(EdgeId).map(f).collect())
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.0[e.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Maximum weight over `edges`, with the first edge attaining it.
    pub fn bottleneck_of(&self, edges: &[EdgeId]) -> Option<(EdgeId, f64)> {
        let mut best: Option<(EdgeId, f64)> = None;
        for &e in edges {
            let w = self.get(e);
            match best {
                Some((_, b)) if w <= b => {}
                _ => best = Some((e, w)),
            }
        }
        best
    }
}

/// A simple directed path together with its heaviest edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSelection {
    pub edges: Vec<EdgeId>,
    /// `None` only for the empty path returned when source == target.
    pub bottleneck_edge: Option<EdgeId>,
    pub bottleneck_value: f64,
}

impl PathSelection {
    pub fn empty() -> Self {
        Self { edges: Vec::new(), bottleneck_edge: None, bottleneck_value: f64::NEG_INFINITY }
    }

    /// Builds a selection from a contiguous edge list, computing the bottleneck
    /// under `weights`.
    pub fn from_edges(edges: Vec<EdgeId>, weights: &WeightAssignment) -> Self {
        match weights.bottleneck_of(&edges) {
            Some((e, w)) => Self { edges, bottleneck_edge: Some(e), bottleneck_value: w },
            None => Self::empty(),
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Visited nodes, starting at the tail of the first edge.
    pub fn nodes(&self, graph: &DirectedGraph) -> Vec<NodeId> {
        let mut nodes = Vec::with_capacity(self.edges.len() + 1);
        if let Some(first) = self.edges.first() {
            nodes.push(graph.edge(*first).from);
        }
        nodes.extend(self.edges.iter().map(|&e| graph.edge(e).to));
        nodes
    }
}

/// Heap entry ordered so that `BinaryHeap` pops the smallest (label, node).
#[derive(Debug, Clone, Copy)]
struct Frontier {
    label: f64,
    node: NodeId,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .label
            .total_cmp(&self.label)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Labels and predecessor edges of a single-source minimax search.
#[derive(Debug, Clone)]
pub struct MinimaxTree {
    pub source: NodeId,
    /// Minimax value from the source; `-inf` at the source, `None` if unreachable.
    pub labels: Vec<Option<f64>>,
    pub predecessor: Vec<Option<EdgeId>>,
}

impl MinimaxTree {
    pub fn path_to(&self, graph: &DirectedGraph, target: NodeId) -> Option<Vec<EdgeId>> {
        self.labels.get(target.0).copied().flatten()?;
        let mut edges = Vec::new();
        let mut node = target;
        while node != self.source {
            let e = self.predecessor[node.0]?;
            edges.push(e);
            node = graph.edge(e).from;
        }
        edges.reverse();
        Some(edges)
    }
}

fn check_weights(graph: &DirectedGraph, weights: &WeightAssignment) -> Result<(), GraphError> {
    if weights.len() != graph.edge_count() {
        return Err(GraphError::WeightCountMismatch { expected: graph.edge_count(), got: weights.len() });
    }
    if let Some(i) = weights.values().iter().position(|w| w.is_nan()) {
        return Err(GraphError::NanWeight(EdgeId(i)));
    }
    Ok(())
}

fn search(
    graph: &DirectedGraph,
    weights: &WeightAssignment,
    source: NodeId,
    stop_at: Option<NodeId>,
) -> MinimaxTree {
    let n = graph.node_count();
    let mut labels: Vec<Option<f64>> = vec![None; n];
    let mut predecessor: Vec<Option<EdgeId>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();

    labels[source.0] = Some(f64::NEG_INFINITY);
    heap.push(Frontier { label: f64::NEG_INFINITY, node: source });

    while let Some(Frontier { label, node }) = heap.pop() {
        if settled[node.0] {
            continue;
        }
        settled[node.0] = true;
        if Some(node) == stop_at {
            break;
        }
        for &e in graph.outgoing(node) {
            let next = graph.edge(e).to;
            if settled[next.0] {
                continue;
            }
            let candidate = label.max(weights.get(e));
            // Strict improvement only: on ties the first predecessor stays.
            let improves = match labels[next.0] {
                None => true,
                Some(current) => candidate < current,
            };
            if improves {
                labels[next.0] = Some(candidate);
                predecessor[next.0] = Some(e);
                heap.push(Frontier { label: candidate, node: next });
            }
        }
    }

    MinimaxTree { source, labels, predecessor }
}

/// Single-source minimax labels for every node reachable from `source`.
pub fn minimax_tree(
    graph: &DirectedGraph,
    weights: &WeightAssignment,
    source: NodeId,
) -> Result<MinimaxTree, GraphError> {
    graph.check_node(source)?;
    check_weights(graph, weights)?;
    Ok(search(graph, weights, source, None))
}

/// Returns a simple path from `source` to `target` minimizing the maximum edge
/// weight along it.
///
/// Weights may be any non-NaN real, including negative values. Ties between
/// equal labels settle the lower node index first, and a tied relaxation never
/// replaces an existing predecessor, so the result is deterministic. When
/// `source == target` the empty path with a `-inf` bottleneck is returned.
pub fn minimax_path(
    graph: &DirectedGraph,
    weights: &WeightAssignment,
    source: NodeId,
    target: NodeId,
) -> Result<PathSelection, GraphError> {
    graph.check_node(source)?;
    graph.check_node(target)?;
    check_weights(graph, weights)?;
    if source == target {
        return Ok(PathSelection::empty());
    }
    let tree = search(graph, weights, source, Some(target));
    let edges = tree
        .path_to(graph, target)
        .ok_or(GraphError::NoPath { from: source, to: target })?;
    let bottleneck_value = tree.labels[target.0].expect("target settled");
    // The label is copied from one of the path's weights; pick the first edge carrying it.
    let bottleneck_edge = edges
        .iter()
        .copied()
        .find(|&e| weights.get(e) == bottleneck_value);
    Ok(PathSelection { edges, bottleneck_edge, bottleneck_value })
}

/// Structural check of a [`PathSelection`] against a graph and endpoints.
///
/// The bottleneck value is not checked since it depends on the weights the
/// path was selected under.
pub fn validate_path(graph: &DirectedGraph, path: &PathSelection, source: NodeId, target: NodeId) -> bool {
    if !graph.contains_node(source) || !graph.contains_node(target) {
        return false;
    }
    if path.edges.is_empty() {
        return source == target && path.bottleneck_edge.is_none();
    }
    if path.edges.iter().any(|e| e.0 >= graph.edge_count()) {
        return false;
    }
    match path.bottleneck_edge {
        Some(b) if path.edges.contains(&b) => {}
        _ => return false,
    }
    let first = graph.edge(path.edges[0]);
    let last = graph.edge(*path.edges.last().unwrap());
    if first.from != source || last.to != target {
        return false;
    }
    if path
        .edges
        .windows(2)
        .any(|pair| graph.edge(pair[0]).to != graph.edge(pair[1]).from)
    {
        return false;
    }
    let mut seen = vec![false; graph.node_count()];
    for node in path.nodes(graph) {
        if std::mem::replace(&mut seen[node.0], true) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph_from(n: usize, edges: &[(usize, usize)]) -> DirectedGraph {
        let mut g = DirectedGraph::new(n);
        for &(u, v) in edges {
            g.add_edge(NodeId(u), NodeId(v), 1.0).unwrap();
        }
        g
    }

    #[test]
    fn three_node_example_prefers_two_hop_route() {
        // 1->2 (5), 2->3 (1), 1->3 (7), zero-based.
        let g = graph_from(3, &[(0, 1), (1, 2), (0, 2)]);
        let w = WeightAssignment::new(vec![5.0, 1.0, 7.0]);
        let p = minimax_path(&g, &w, NodeId(0), NodeId(2)).unwrap();
        assert_eq!(p.edges, vec![EdgeId(0), EdgeId(1)]);
        assert_eq!(p.bottleneck_value, 5.0);
        assert_eq!(p.bottleneck_edge, Some(EdgeId(0)));
    }

    #[test]
    fn single_edge() {
        let g = graph_from(2, &[(0, 1)]);
        let w = WeightAssignment::new(vec![3.2]);
        let p = minimax_path(&g, &w, NodeId(0), NodeId(1)).unwrap();
        assert_eq!(p.edges, vec![EdgeId(0)]);
        assert_eq!(p.bottleneck_value, 3.2);
    }

    #[test]
    fn unreachable_target_is_no_path() {
        let g = graph_from(3, &[(0, 1)]);
        let w = WeightAssignment::new(vec![1.0]);
        assert_eq!(
            minimax_path(&g, &w, NodeId(0), NodeId(2)),
            Err(GraphError::NoPath { from: NodeId(0), to: NodeId(2) })
        );
    }

    #[test]
    fn same_node_returns_empty_sentinel() {
        let g = graph_from(2, &[(0, 1)]);
        let w = WeightAssignment::new(vec![1.0]);
        let p = minimax_path(&g, &w, NodeId(1), NodeId(1)).unwrap();
        assert!(p.edges.is_empty());
        assert_eq!(p.bottleneck_edge, None);
        assert_eq!(p.bottleneck_value, f64::NEG_INFINITY);
        assert!(validate_path(&g, &p, NodeId(1), NodeId(1)));
    }

    #[test]
    fn negative_weights_are_fine() {
        let g = graph_from(4, &[(0, 1), (1, 3), (0, 2), (2, 3)]);
        let w = WeightAssignment::new(vec![-1.0, -5.0, -3.0, -0.5]);
        let p = minimax_path(&g, &w, NodeId(0), NodeId(3)).unwrap();
        assert_eq!(p.edges, vec![EdgeId(0), EdgeId(1)]);
        assert_eq!(p.bottleneck_value, -1.0);
    }

    #[test]
    fn ties_prefer_lower_node_index() {
        // Two equal-bottleneck routes through node 1 and node 2.
        let g = graph_from(4, &[(0, 2), (2, 3), (0, 1), (1, 3)]);
        let w = WeightAssignment::new(vec![1.0; 4]);
        let p = minimax_path(&g, &w, NodeId(0), NodeId(3)).unwrap();
        assert_eq!(p.edges, vec![EdgeId(2), EdgeId(3)]);
    }

    #[test]
    fn nan_weight_rejected() {
        let g = graph_from(2, &[(0, 1)]);
        let w = WeightAssignment::new(vec![f64::NAN]);
        assert_eq!(minimax_path(&g, &w, NodeId(0), NodeId(1)), Err(GraphError::NanWeight(EdgeId(0))));
    }

    #[test]
    fn wrong_weight_count_rejected() {
        let g = graph_from(2, &[(0, 1)]);
        let w = WeightAssignment::new(vec![]);
        assert!(matches!(
            minimax_path(&g, &w, NodeId(0), NodeId(1)),
            Err(GraphError::WeightCountMismatch { .. })
        ));
    }

    #[test]
    fn add_edge_rejects_bad_input() {
        let mut g = DirectedGraph::new(2);
        assert!(g.add_edge(NodeId(0), NodeId(2), 1.0).is_err());
        assert_eq!(g.add_edge(NodeId(0), NodeId(1), 0.0), Err(GraphError::InvalidLength(0.0)));
        assert_eq!(g.add_edge(NodeId(0), NodeId(1), -1.0), Err(GraphError::InvalidLength(-1.0)));
    }

    #[test]
    fn validate_path_cases() {
        let g = graph_from(4, &[(0, 1), (1, 2), (2, 3), (2, 0), (3, 2)]);
        let w = WeightAssignment::new(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let good = PathSelection::from_edges(vec![EdgeId(0), EdgeId(1)], &w);
        assert!(validate_path(&g, &good, NodeId(0), NodeId(2)));
        assert!(!validate_path(&g, &good, NodeId(0), NodeId(3)));

        let broken = PathSelection::from_edges(vec![EdgeId(0), EdgeId(2)], &w);
        assert!(!validate_path(&g, &broken, NodeId(0), NodeId(3)));

        // 0 -> 1 -> 2 -> 0 -> 1 ... revisits node 0
        let cyclic = PathSelection::from_edges(vec![EdgeId(0), EdgeId(1), EdgeId(3), EdgeId(0)], &w);
        assert!(!validate_path(&g, &cyclic, NodeId(0), NodeId(1)));

        let mut wrong_bottleneck = good.clone();
        wrong_bottleneck.bottleneck_edge = Some(EdgeId(4));
        assert!(!validate_path(&g, &wrong_bottleneck, NodeId(0), NodeId(2)));
    }

    #[test]
    fn reachability() {
        let g = graph_from(3, &[(0, 1), (2, 1)]);
        assert!(g.is_reachable(NodeId(0), NodeId(1)));
        assert!(!g.is_reachable(NodeId(0), NodeId(2)));
    }
}
