//! Piecewise-linear finite elements on metric graphs.
//!
//! Each edge is cut into equal segments; vertex nodes are shared by all
//! incident edges, which is exactly continuity at the vertices. The Kirchhoff
//! condition is natural and never imposed. `K` and `M` are the discrete
//! numerator and denominator of the Rayleigh quotient, so the generalized
//! eigenvalues of `(K, M)` are upper bounds for the graph eigenvalues.

mod eigen;
mod inertia;

use nalgebra::DMatrix;

use crate::graph::MetricGraph;

pub use eigen::{compute_spectrum_fem, discrete_eigenvalues, FemOptions, FemReport};
pub use inertia::{bunch_kaufman_inertia, count_below, count_below_dense, count_below_structured, Inertia};

/// Operators with fewer degrees of freedom are factored densely.
pub const DENSE_DOF_LIMIT: usize = 200;

/// Symmetric sparse matrix in compressed-row form (both triangles stored).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    fn from_triplets(n: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_by_key(|a| (a.0, a.1));
        let mut row_start = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_start[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        SparseSym {
            n,
            row_start,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }
}

/// Stiffness/mass pair of a graph discretization.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    vertex_count: usize,
    component_count: usize,
    /// global node indices along each edge from `u` to `v`, endpoints included
    edge_dofs: Vec<Vec<usize>>,
    element_sizes: Vec<f64>,
    pub stiffness: SparseSym,
    pub mass: SparseSym,
}

impl DiscreteOperator {
    pub fn dof_count(&self) -> usize {
        self.stiffness.dim()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    /// Global indices of the nodes on `edge`, from its `u` end to its `v` end.
    pub fn dof_map(&self, edge: usize) -> &[usize] {
        &self.edge_dofs[edge]
    }

    pub fn element_size(&self, edge: usize) -> f64 {
        self.element_sizes[edge]
    }

    /// Largest element size over all edges.
    pub fn mesh_size(&self) -> f64 {
        self.element_sizes.iter().copied().fold(0.0, f64::max)
    }

    pub fn segments(&self, edge: usize) -> usize {
        self.edge_dofs[edge].len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_dofs.len()
    }

    /// Dense `K - sigma M`.
    pub fn shifted_dense(&self, sigma: f64) -> DMatrix<f64> {
        self.stiffness.to_dense() - self.mass.to_dense() * sigma
    }
}

/// Meshes every edge with `max(2, ceil(L(e) / h_target))` equal segments.
pub fn discretize(g: &MetricGraph, h_target: f64) -> DiscreteOperator {
    assert!(h_target > 0.0, "mesh size must be positive");
    let segments: Vec<usize> = g
        .edges()
        .iter()
        .map(|e| ((e.length / h_target).ceil() as usize).max(2))
        .collect();
    discretize_segments(g, &segments)
}

/// Meshes edge `i` with `segments[i] >= 1` equal segments.
pub fn discretize_segments(g: &MetricGraph, segments: &[usize]) -> DiscreteOperator {
    assert_eq!(segments.len(), g.edge_count());
    let mut next = g.vertex_count();
    let mut edge_dofs = Vec::with_capacity(g.edge_count());
    let mut element_sizes = Vec::with_capacity(g.edge_count());
    let mut k_trip = Vec::new();
    let mut m_trip = Vec::new();
    for (e, &n) in g.edges().iter().zip(segments) {
        assert!(n >= 1);
        let h = e.length / n as f64;
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(e.u);
        for _ in 1..n {
            nodes.push(next);
            next += 1;
        }
        nodes.push(e.v);
        let (kd, ko) = (1.0 / h, -1.0 / h);
        let (md, mo) = (h / 3.0, h / 6.0);
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            k_trip.extend([(a, a, kd), (b, b, kd), (a, b, ko), (b, a, ko)]);
            m_trip.extend([(a, a, md), (b, b, md), (a, b, mo), (b, a, mo)]);
        }
        edge_dofs.push(nodes);
        element_sizes.push(h);
    }
    DiscreteOperator {
        vertex_count: g.vertex_count(),
        component_count: g.component_count(),
        edge_dofs,
        element_sizes,
        stiffness: SparseSym::from_triplets(next, k_trip),
        mass: SparseSym::from_triplets(next, m_trip),
    }
}
