//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use minimax_bandit::environment::{Matrix, Vector};
use minimax_bandit::graph::{DirectedGraph, EdgeId, NodeId, WeightAssignment};
use rand::Rng;

/// Smallest path maximum over every simple path, by exhaustive DFS.
/// `None` when the target is unreachable.
pub fn brute_force_minimax(graph: &DirectedGraph, weights: &WeightAssignment, source: NodeId, target: NodeId) -> Option<f64> {
    fn dfs(
        graph: &DirectedGraph,
        weights: &WeightAssignment,
        node: NodeId,
        target: NodeId,
        visited: &mut Vec<bool>,
        current_max: f64,
        best: &mut Option<f64>,
    ) {
        if node == target {
            *best = Some(best.map_or(current_max, |b| b.min(current_max)));
            return;
        }
        for &e in graph.outgoing(node) {
            let next = graph.edge(e).to;
            if visited[next.0] {
                continue;
            }
            visited[next.0] = true;
            dfs(graph, weights, next, target, visited, current_max.max(weights.get(e)), best);
            visited[next.0] = false;
        }
    }
    let mut visited = vec![false; graph.node_count()];
    visited[source.0] = true;
    let mut best = None;
    dfs(graph, weights, source, target, &mut visited, f64::NEG_INFINITY, &mut best);
    best
}

/// Random digraph with `n` nodes and up to `m` distinct non-loop edges.
pub fn random_digraph<R: Rng>(rng: &mut R, n: usize, m: usize) -> DirectedGraph {
    let mut graph = DirectedGraph::new(n);
    let mut seen = std::collections::HashSet::new();
    for _ in 0..m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && seen.insert((a, b)) {
            graph.add_edge(NodeId(a), NodeId(b), rng.random_range(10.0..500.0)).unwrap();
        }
    }
    graph
}

pub fn uniform_weights<R: Rng>(rng: &mut R, graph: &DirectedGraph) -> WeightAssignment {
    WeightAssignment::from_fn(graph, |_: EdgeId| rng.random_range(0.0..1.0))
}

pub fn random_vector<R: Rng>(rng: &mut R, d: usize, scale: f64) -> Vector {
    Vector::from_fn(d, |_, _| rng.random_range(-scale..scale))
}

/// Well-conditioned symmetric positive definite matrix `B B^T + I / 2`.
pub fn random_spd<R: Rng>(rng: &mut R, d: usize) -> Matrix {
    let b = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose() + Matrix::identity(d, d) * 0.5
}

/// Conjugate Gaussian posterior computed in one shot from the whole stream:
/// `cov = (S0^-1 + C^T C / s2)^-1`, `mean = cov (S0^-1 m0 + C^T w / s2)`.
pub fn batch_posterior(mean0: &Vector, cov0: &Matrix, contexts: &[Vector], weights: &[f64], noise_var: f64) -> (Vector, Matrix) {
    let prec0 = cov0.clone().try_inverse().expect("prior invertible");
    let mut precision = prec0.clone();
    let mut shift = &prec0 * mean0;
    for (c, &w) in contexts.iter().zip(weights) {
        precision += c * c.transpose() / noise_var;
        shift += c * (w / noise_var);
    }
    let cov = precision.try_inverse().expect("posterior precision invertible");
    let mean = &cov * shift;
    (mean, cov)
}

/// `|a - b| / max(|b|, floor)` under the Frobenius norm.
pub fn rel_err_vec(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm() / b.norm().max(1e-12)
}

pub fn rel_err_mat(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-12)
}
