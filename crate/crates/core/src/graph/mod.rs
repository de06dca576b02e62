//! Metric graph data model.
//!
//! A [`MetricGraph`] is a finite multigraph without loops whose edges carry
//! strictly positive, finite lengths. Vertices are dense indices
//! `0..vertex_count`; an edge `(u, v, length)` is parametrized by `x ∈ [0,
//! length]` running from `u` (x = 0) to `v` (x = length). Graphs are immutable
//! once built; every operation that changes the shape returns a new graph.

mod canonical;
mod generate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canonical::{tree_canonical_code, LENGTH_DIGITS};
pub use generate::{
    make_equilateral_star, make_extremal_star, make_path, make_random_series_reduced_tree,
    make_random_star, make_random_tree, make_star, random_simplex_lengths,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("edge {edge} has non-positive or non-finite length {length}")]
    NonPositiveLength { edge: usize, length: f64 },
    #[error("edge {edge} is a loop at vertex {vertex}")]
    LoopEdge { edge: usize, vertex: usize },
    #[error("edge {edge} references vertex {vertex}, but the graph has {vertex_count} vertices")]
    BadVertexIndex {
        edge: usize,
        vertex: usize,
        vertex_count: usize,
    },
    #[error("vertex {0} has no incident edge")]
    IsolatedVertex(usize),
    #[error("graph has no edges")]
    Empty,
    #[error("edge index {edge} out of range (graph has {edge_count} edges)")]
    EdgeOutOfRange { edge: usize, edge_count: usize },
    #[error("split position {t} outside (0, {length}) on edge {edge}")]
    SplitOutOfRange { edge: usize, t: f64, length: f64 },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("malformed graph file: {0}")]
    Parse(String),
}

/// One edge of a metric graph, running from `u` (x = 0) to `v` (x = length).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, length: f64) -> Self {
        Edge { u, v, length }
    }

    /// The endpoint opposite to `w`. `w` must be an endpoint.
    pub fn other(&self, w: usize) -> usize {
        if self.u == w {
            self.v
        } else {
            self.u
        }
    }

    pub fn is_incident(&self, w: usize) -> bool {
        self.u == w || self.v == w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
}

/// A validated metric graph. See the module documentation for conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct MetricGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    /// incidence lists: edge indices incident to each vertex, in edge order
    incidence: Vec<Vec<usize>>,
    component_count: usize,
}

impl TryFrom<RawGraph> for MetricGraph {
    type Error = GraphError;

    fn try_from(raw: RawGraph) -> Result<Self, Self::Error> {
        MetricGraph::new(raw.vertex_count, raw.edges)
    }
}

impl From<MetricGraph> for RawGraph {
    fn from(g: MetricGraph) -> Self {
        RawGraph {
            vertex_count: g.vertex_count,
            edges: g.edges,
        }
    }
}

/// Summary quantities of a metric graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub total_length: f64,
    pub edge_count: usize,
    pub average_edge_length: f64,
    pub boundary_count: usize,
    pub is_tree: bool,
    pub component_count: usize,
}

/// Validates the edge list and builds a graph.
pub fn build_graph(vertex_count: usize, edges: Vec<Edge>) -> Result<MetricGraph, GraphError> {
    MetricGraph::new(vertex_count, edges)
}

impl MetricGraph {
    pub fn new(vertex_count: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if edges.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut incidence = vec![Vec::new(); vertex_count];
        for (i, e) in edges.iter().enumerate() {
            for w in [e.u, e.v] {
                if w >= vertex_count {
                    return Err(GraphError::BadVertexIndex {
                        edge: i,
                        vertex: w,
                        vertex_count,
                    });
                }
            }
            if e.u == e.v {
                return Err(GraphError::LoopEdge {
                    edge: i,
                    vertex: e.u,
                });
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(GraphError::NonPositiveLength {
                    edge: i,
                    length: e.length,
                });
            }
            incidence[e.u].push(i);
            incidence[e.v].push(i);
        }
        if let Some(v) = incidence.iter().position(Vec::is_empty) {
            return Err(GraphError::IsolatedVertex(v));
        }
        let component_count = count_components(vertex_count, &edges);
        Ok(MetricGraph {
            vertex_count,
            edges,
            incidence,
            component_count,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let raw: RawGraph =
            serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        MetricGraph::new(raw.vertex_count, raw.edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization cannot fail")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.length).collect()
    }

    /// Edge indices incident to `v` (a multi-edge appears once per edge).
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.incidence.iter().map(Vec::len).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.length)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    pub fn is_connected(&self) -> bool {
        self.component_count == 1
    }

    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.vertex_count == self.edges.len() + 1
    }

    pub fn has_degree_two_vertex(&self) -> bool {
        self.incidence.iter().any(|inc| inc.len() == 2)
    }

    /// A pendant edge has an endpoint of degree one.
    pub fn is_pendant(&self, edge: usize) -> bool {
        let e = &self.edges[edge];
        self.degree(e.u) == 1 || self.degree(e.v) == 1
    }

    pub fn check_edge(&self, edge: usize) -> Result<(), GraphError> {
        if edge >= self.edges.len() {
            Err(GraphError::EdgeOutOfRange {
                edge,
                edge_count: self.edges.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn summary(&self) -> GraphSummary {
        summarize(self)
    }

    /// Same combinatorics, every length multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<MetricGraph, GraphError> {
        if !(s.is_finite() && s > 0.0) {
            return Err(GraphError::BadParameter(format!("scale factor {s}")));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(e.u, e.v, e.length * s))
            .collect();
        MetricGraph::new(self.vertex_count, edges)
    }

    /// Same combinatorics with new edge lengths (in edge order).
    pub fn with_lengths(&self, lengths: &[f64]) -> Result<MetricGraph, GraphError> {
        if lengths.len() != self.edges.len() {
            return Err(GraphError::BadParameter(format!(
                "expected {} lengths, got {}",
                self.edges.len(),
                lengths.len()
            )));
        }
        let edges = self
            .edges
            .iter()
            .zip(lengths)
            .map(|(e, &l)| Edge::new(e.u, e.v, l))
            .collect();
        MetricGraph::new(self.vertex_count, edges)
    }

    /// Connected components as standalone graphs, ordered by smallest vertex.
    /// Each component keeps its vertices and edges in their original relative
    /// order.
    pub fn components(&self) -> Vec<MetricGraph> {
        let label = component_labels(self.vertex_count, &self.edges);
        let mut order: Vec<usize> = Vec::new();
        for &c in &label {
            if !order.contains(&c) {
                order.push(c);
            }
        }
        order
            .into_iter()
            .map(|c| {
                let keep: Vec<bool> = label.iter().map(|&l| l == c).collect();
                self.induced(&keep)
            })
            .collect()
    }

    /// Subgraph on the vertices flagged in `keep` (with every edge whose both
    /// endpoints are kept), relabelled densely.
    pub(crate) fn induced(&self, keep: &[bool]) -> MetricGraph {
        let mut map = vec![usize::MAX; self.vertex_count];
        let mut next = 0;
        for (v, &k) in keep.iter().enumerate() {
            if k {
                map[v] = next;
                next += 1;
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.u] && keep[e.v])
            .map(|e| Edge::new(map[e.u], map[e.v], e.length))
            .collect();
        MetricGraph::new(next, edges).expect("induced subgraph of a valid graph")
    }

    /// Path of edges between two vertices of a tree, ordered from `from` to
    /// `to`. Returns `None` if `to` is unreachable.
    pub fn tree_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut parent_edge = vec![usize::MAX; self.vertex_count];
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(x) = stack.pop() {
            if x == to {
                break;
            }
            for &ei in &self.incidence[x] {
                let y = self.edges[ei].other(x);
                if !seen[y] {
                    seen[y] = true;
                    parent_edge[y] = ei;
                    stack.push(y);
                }
            }
        }
        if !seen[to] {
            return None;
        }
        let mut path = Vec::new();
        let mut x = to;
        while x != from {
            let ei = parent_edge[x];
            path.push(ei);
            x = self.edges[ei].other(x);
        }
        path.reverse();
        Some(path)
    }
}

impl fmt::Display for MetricGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MetricGraph(V={}, edges=[", self.vertex_count)?;
        for (i, e) in self.edges.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}-{}:{}", e.u, e.v, e.length)?;
        }
        write!(f, "])")
    }
}

fn component_labels(vertex_count: usize, edges: &[Edge]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..vertex_count).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in edges {
        let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    (0..vertex_count).map(|v| find(&mut parent, v)).collect()
}

fn count_components(vertex_count: usize, edges: &[Edge]) -> usize {
    let labels = component_labels(vertex_count, edges);
    labels.iter().enumerate().filter(|&(v, &l)| v == l).count()
}

pub fn summarize(g: &MetricGraph) -> GraphSummary {
    let total_length = g.total_length();
    let edge_count = g.edge_count();
    GraphSummary {
        total_length,
        edge_count,
        average_edge_length: total_length / edge_count as f64,
        boundary_count: g.degrees().iter().filter(|&&d| d == 1).count(),
        is_tree: g.is_tree(),
        component_count: g.component_count(),
    }
}

/// Splits edge `edge` at distance `t` from its `u` end. The first piece keeps
/// the edge index, the second piece is appended, and the new degree-two
/// vertex gets index `vertex_count`.
pub fn split_edge(g: &MetricGraph, edge: usize, t: f64) -> Result<MetricGraph, GraphError> {
    g.check_edge(edge)?;
    let e = g.edges[edge];
    if !(t > 0.0 && t < e.length) {
        return Err(GraphError::SplitOutOfRange {
            edge,
            t,
            length: e.length,
        });
    }
    let w = g.vertex_count;
    let mut edges = g.edges.clone();
    edges[edge] = Edge::new(e.u, w, t);
    edges.push(Edge::new(w, e.v, e.length - t));
    MetricGraph::new(w + 1, edges)
}

/// Merges the two edges at every degree-two vertex into one edge. Merges that
/// would create a loop are skipped, so a cycle collapses to a two-edge cycle.
pub fn suppress_degree_two(g: &MetricGraph) -> MetricGraph {
    let mut vertex_count = g.vertex_count;
    let mut edges: Vec<Edge> = g.edges.clone();
    loop {
        let mut incidence = vec![Vec::new(); vertex_count];
        for (i, e) in edges.iter().enumerate() {
            incidence[e.u].push(i);
            incidence[e.v].push(i);
        }
        let candidate = (0..vertex_count).find(|&v| {
            incidence[v].len() == 2 && {
                let (a, b) = (incidence[v][0], incidence[v][1]);
                edges[a].other(v) != edges[b].other(v)
            }
        });
        let Some(v) = candidate else { break };
        let (i, j) = (incidence[v][0], incidence[v][1]);
        let (a, b) = (edges[i].other(v), edges[j].other(v));
        // orient the merged edge so it reads a -> v -> b
        edges[i] = Edge::new(a, b, edges[i].length + edges[j].length);
        edges.remove(j);
        for e in edges.iter_mut() {
            if e.u > v {
                e.u -= 1;
            }
            if e.v > v {
                e.v -= 1;
            }
        }
        vertex_count -= 1;
    }
    MetricGraph::new(vertex_count, edges).expect("suppression preserves validity")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(u: usize, v: usize, l: f64) -> Edge {
        Edge::new(u, v, l)
    }

    #[test]
    fn builds_interval_and_star() {
        let g = build_graph(2, vec![e(0, 1, 3.0)]).unwrap();
        assert!(g.is_tree());
        let s = build_graph(4, vec![e(0, 1, 0.6), e(0, 2, 0.2), e(0, 3, 0.2)]).unwrap();
        assert!(s.is_tree());
        assert_eq!(s.degree(0), 3);
    }

    #[test]
    fn rejects_invalid_edges() {
        assert!(matches!(
            build_graph(1, vec![e(0, 0, 1.0)]),
            Err(GraphError::LoopEdge { edge: 0, vertex: 0 })
        ));
        assert!(matches!(
            build_graph(2, vec![e(0, 1, 0.0)]),
            Err(GraphError::NonPositiveLength { .. })
        ));
        assert!(matches!(
            build_graph(2, vec![e(0, 1, f64::NAN)]),
            Err(GraphError::NonPositiveLength { .. })
        ));
        assert!(matches!(
            build_graph(2, vec![e(0, 2, 1.0)]),
            Err(GraphError::BadVertexIndex { vertex: 2, .. })
        ));
        assert!(matches!(
            build_graph(3, vec![e(0, 1, 1.0)]),
            Err(GraphError::IsolatedVertex(2))
        ));
        assert!(matches!(build_graph(0, vec![]), Err(GraphError::Empty)));
    }

    #[test]
    fn summary_of_three_star() {
        let g = make_star(&[3.0, 1.0, 1.0]).unwrap();
        let s = summarize(&g);
        assert_eq!(s.total_length, 5.0);
        assert_eq!(s.edge_count, 3);
        assert!((s.average_edge_length - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.boundary_count, 3);
        assert!(s.is_tree);
        assert_eq!(s.component_count, 1);
    }

    #[test]
    fn summary_of_interval_and_equilateral_star() {
        let s = summarize(&make_path(7.0).unwrap());
        assert_eq!(s.average_edge_length, 7.0);
        assert_eq!(s.boundary_count, 2);
        let s = summarize(&make_star(&[1.0, 1.0, 1.0]).unwrap());
        assert_eq!(s.average_edge_length, 1.0);
        assert!(s.is_tree);
    }

    #[test]
    fn split_interval_in_half() {
        let g = split_edge(&make_path(2.0).unwrap(), 0, 1.0).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.lengths(), vec![1.0, 1.0]);
        assert_eq!(g.degree(2), 2);
    }

    #[test]
    fn split_long_arm_of_star() {
        let g = make_star(&[3.0, 1.0, 1.0]).unwrap();
        let h = split_edge(&g, 0, 1.5).unwrap();
        let s = summarize(&h);
        assert_eq!(s.edge_count, 4);
        assert_eq!(s.total_length, 5.0);
        assert_eq!(s.average_edge_length, 1.25);
        assert!(s.is_tree);
        assert!(s.average_edge_length < summarize(&g).average_edge_length);
    }

    #[test]
    fn split_out_of_range() {
        let g = make_path(2.0).unwrap();
        for t in [0.0, 2.0, -1.0, 3.0] {
            assert!(matches!(
                split_edge(&g, 0, t),
                Err(GraphError::SplitOutOfRange { .. })
            ));
        }
        assert!(matches!(
            split_edge(&g, 1, 1.0),
            Err(GraphError::EdgeOutOfRange { .. })
        ));
    }

    #[test]
    fn suppress_merges_path() {
        let g = build_graph(3, vec![e(0, 1, 1.0), e(1, 2, 1.0)]).unwrap();
        let h = suppress_degree_two(&g);
        assert_eq!(h.vertex_count(), 2);
        assert_eq!(h.lengths(), vec![2.0]);
    }

    #[test]
    fn suppress_is_identity_without_degree_two() {
        let g = make_star(&[3.0, 1.0, 1.0]).unwrap();
        assert_eq!(suppress_degree_two(&g), g);
    }

    #[test]
    fn suppress_cycle_stops_before_loop() {
        let g = build_graph(3, vec![e(0, 1, 1.0), e(1, 2, 1.0), e(2, 0, 1.0)]).unwrap();
        let h = suppress_degree_two(&g);
        assert_eq!(h.vertex_count(), 2);
        assert_eq!(h.edge_count(), 2);
        assert!((h.total_length() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn components_of_disconnected_graph() {
        let g = build_graph(4, vec![e(0, 1, 0.8), e(2, 3, 0.2)]).unwrap();
        assert_eq!(g.component_count(), 2);
        assert!(!g.is_tree());
        let parts = g.components();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].lengths(), vec![0.8]);
        assert_eq!(parts[1].lengths(), vec![0.2]);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let g = make_random_tree(7, 3, 0.05).unwrap();
        let back = MetricGraph::from_json(&g.to_json()).unwrap();
        for (a, b) in g.edges().iter().zip(back.edges()) {
            assert_eq!(a.length.to_bits(), b.length.to_bits());
        }
        assert_eq!(g, back);
    }

    #[test]
    fn json_rejects_loops_and_garbage() {
        let text = r#"{"vertex_count": 1, "edges": [{"u": 0, "v": 0, "length": 1.0}]}"#;
        assert!(matches!(
            MetricGraph::from_json(text),
            Err(GraphError::LoopEdge { .. })
        ));
        assert!(matches!(
            MetricGraph::from_json("{not json"),
            Err(GraphError::Parse(_))
        ));
    }

    #[test]
    fn tree_path_in_star() {
        let g = make_star(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.tree_path(1, 2), Some(vec![0, 1]));
        assert_eq!(g.tree_path(0, 3), Some(vec![2]));
    }
}
