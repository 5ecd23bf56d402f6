//! Bidirectional grid scenarios standing in for real road data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EnvError, RoadNetwork, Scenario, ScenarioOptions, Vector};
use crate::graph::{DirectedGraph, NodeId};

pub const LENGTH_RANGE_M: (f64, f64) = (50.0, 500.0);
pub const CONTEXT_MEAN_RANGE: (f64, f64) = (5.0, 30.0);
pub const CONTEXT_VAR_RANGE: (f64, f64) = (0.1, 4.0);
const SPEED_LIMIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    pub fn new(width: usize, height: usize) -> Result<Self, String> {
        if width < 2 || height < 2 {
            return Err(format!("grid must be at least 2x2, got {width}x{height}"));
        }
        Ok(Self { width, height })
    }

    pub fn node(&self, x: usize, y: usize) -> NodeId {
        NodeId(y * self.width + x)
    }

    pub fn source(&self) -> NodeId {
        self.node(0, 0)
    }

    pub fn target(&self) -> NodeId {
        self.node(self.width - 1, self.height - 1)
    }

    pub fn directed_edge_count(&self) -> usize {
        2 * (self.height * (self.width - 1) + self.width * (self.height - 1))
    }

    /// Random lengths and context statistics on the lattice, seeded.
    pub fn network(&self, d: usize, seed: u64) -> RoadNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut graph = DirectedGraph::new(self.width * self.height);
        let mut net = RoadNetwork {
            graph: DirectedGraph::new(0),
            node_labels: (0..self.height)
                .flat_map(|y| (0..self.width).map(move |x| format!("n{x}_{y}")))
                .collect(),
            edge_labels: Vec::new(),
            speed_limits: Vec::new(),
            hour_labels: (1..=d).map(|h| h.to_string()).collect(),
            context_means: Vec::new(),
            context_vars: Vec::new(),
            d,
            declared_nodes: true,
        };

        let mut lattice = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if x + 1 < self.width {
                    lattice.push((self.node(x, y), self.node(x + 1, y)));
                }
                if y + 1 < self.height {
                    lattice.push((self.node(x, y), self.node(x, y + 1)));
                }
            }
        }
        for (a, b) in lattice {
            for (from, to) in [(a, b), (b, a)] {
                let length = rng.random_range(LENGTH_RANGE_M.0..=LENGTH_RANGE_M.1);
                let id = graph.add_edge(from, to, length).expect("grid nodes in range");
                net.edge_labels.push(format!("e{}", id.0));
                net.speed_limits.push(SPEED_LIMIT);
                net.context_means
                    .push(Vector::from_fn(d, |_, _| rng.random_range(CONTEXT_MEAN_RANGE.0..=CONTEXT_MEAN_RANGE.1)));
                net.context_vars
                    .push(Vector::from_fn(d, |_, _| rng.random_range(CONTEXT_VAR_RANGE.0..=CONTEXT_VAR_RANGE.1)));
            }
        }
        net.graph = graph;
        net
    }
}

/// Synthetic grid scenario from the corner `(0, 0)` to the opposite corner,
/// with length-scaled priors and unit noise.
pub fn generate_synthetic(spec: GridSpec, d: usize, seed: u64) -> Result<Scenario, EnvError> {
    let net = spec.network(d, seed);
    Scenario::from_network(&net, spec.source(), spec.target(), &ScenarioOptions::default())
}
