use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::OptimizerError;
use crate::graph::{tree_canonical_code, Edge, GraphError, MetricGraph};

/// A series-reduced tree without lengths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTopology {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
    /// canonical code, equal for isomorphic trees
    pub code: String,
}

fn unit_graph(vertex_count: usize, edges: &[(usize, usize)]) -> Result<MetricGraph, GraphError> {
    MetricGraph::new(
        vertex_count,
        edges.iter().map(|&(u, v)| Edge::new(u, v, 1.0)).collect(),
    )
}

impl TreeTopology {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Result<Self, OptimizerError> {
        let g = unit_graph(vertex_count, &edges)?;
        if !g.is_tree() {
            return Err(OptimizerError::BadParameter("topology is not a tree".into()));
        }
        if g.edge_count() < 3 {
            return Err(OptimizerError::BadParameter("topology needs at least 3 edges".into()));
        }
        if g.has_degree_two_vertex() {
            return Err(OptimizerError::BadParameter("topology has a vertex of degree two".into()));
        }
        let code = tree_canonical_code(&g, false).expect("validated tree");
        Ok(TreeTopology {
            vertex_count,
            edges,
            code,
        })
    }

    /// Topology of a graph's combinatorial structure.
    pub fn of_graph(g: &MetricGraph) -> Result<Self, OptimizerError> {
        TreeTopology::new(g.vertex_count(), g.edges().iter().map(|e| (e.u, e.v)).collect())
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn star(edge_count: usize) -> Result<Self, OptimizerError> {
        TreeTopology::new(edge_count + 1, (1..=edge_count).map(|i| (0, i)).collect())
    }

    pub fn is_star(&self) -> bool {
        let mut deg = vec![0usize; self.vertex_count];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg.contains(&self.edges.len())
    }

    /// The metric tree with `lengths[i]` on edge `i`.
    pub fn graph(&self, lengths: &[f64]) -> Result<MetricGraph, GraphError> {
        if lengths.len() != self.edges.len() {
            return Err(GraphError::BadParameter(format!(
                "expected {} lengths, got {}",
                self.edges.len(),
                lengths.len()
            )));
        }
        MetricGraph::new(
            self.vertex_count,
            self.edges
                .iter()
                .zip(lengths)
                .map(|(&(u, v), &l)| Edge::new(u, v, l))
                .collect(),
        )
    }
}

/// Every tree with `edge_count` edges up to isomorphism, grown one leaf at a
/// time from a single edge. Keyed by canonical code.
fn all_trees(edge_count: usize) -> BTreeMap<String, Vec<(usize, usize)>> {
    let mut level: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    level.insert(
        tree_canonical_code(&unit_graph(2, &[(0, 1)]).unwrap(), false).unwrap(),
        vec![(0, 1)],
    );
    for e in 1..edge_count {
        let mut next = BTreeMap::new();
        for edges in level.values() {
            for v in 0..=e {
                let mut grown = edges.clone();
                grown.push((v, e + 1));
                let g = unit_graph(e + 2, &grown).unwrap();
                let code = tree_canonical_code(&g, false).unwrap();
                next.entry(code).or_insert(grown);
            }
        }
        level = next;
    }
    level
}

/// All series-reduced trees with `edge_count` edges, `3 <= edge_count <= 8`,
/// ordered by canonical code.
pub fn enumerate_topologies(edge_count: usize) -> Result<Vec<TreeTopology>, OptimizerError> {
    if !(3..=8).contains(&edge_count) {
        return Err(OptimizerError::BadParameter(format!(
            "edge count {edge_count} outside 3..=8"
        )));
    }
    Ok(all_trees(edge_count).into_values().filter_map(|edges| TreeTopology::new(edge_count + 1, edges).ok())
        .collect())
}
