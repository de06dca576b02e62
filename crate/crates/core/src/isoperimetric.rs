//! Upper bounds on `mu_{k+1}` of metric trees and a checker that compares a
//! computed spectrum against the sharp one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::SolverError;
use crate::graph::MetricGraph;
use crate::secular::{compute_spectrum_secular, SecularOptions};
use crate::spectrum::Spectrum;

/// `|gap| <= EQUALITY_TOL * bound` counts as attaining the bound.
pub const EQUALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("graph is not a tree")]
    NotATree,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub k: usize,
    /// `mu_{k+1}`
    pub mu_value: f64,
    /// squared average edge length
    pub a_squared: f64,
    pub product: f64,
    pub bound: f64,
    /// `bound - product`
    pub gap: f64,
    pub is_equality: bool,
}

impl BoundReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: &'static str = "k,mu_value,a_squared,product,bound,gap,is_equality";

    /// The report as one CSV record without header or line terminator.
    pub fn to_csv_row(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.serialize(self).expect("report serializes");
        let bytes = w.into_inner().expect("in-memory writer");
        String::from_utf8(bytes).expect("ascii").trim_end().to_string()
    }

    pub fn from_csv_row(row: &str) -> Result<BoundReport, csv::Error> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(row.as_bytes());
        let rec = r.deserialize().next().ok_or_else(|| {
            csv::Error::from(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "empty row"))
        })?;
        rec
    }
}

/// `(2k+1)^2 pi^2 / 36`.
pub fn sharp_bound(k: usize) -> Result<f64, BoundError> {
    if k == 0 {
        return Err(BoundError::BadParameter("k must be at least 1".into()));
    }
    let m = (2 * k + 1) as f64;
    Ok(m * m * PI * PI / 36.0)
}

/// The tree hypotheses of the sharp bound: a tree with at least three edges
/// and no vertex of degree two.
pub fn check_hypotheses(g: &MetricGraph) -> Result<(), BoundError> {
    if !g.is_tree() {
        return Err(BoundError::HypothesisViolated("graph is not a tree".into()));
    }
    if g.edge_count() < 3 {
        return Err(BoundError::HypothesisViolated(format!(
            "tree has {} edges, need at least 3",
            g.edge_count()
        )));
    }
    if let Some(v) = (0..g.vertex_count()).find(|&v| g.degree(v) == 2) {
        return Err(BoundError::HypothesisViolated(format!("vertex {v} has degree two")));
    }
    Ok(())
}

/// Compares `mu_{k+1} A^2`, with `mu_{k+1}` read from `spectrum`, against
/// the sharp bound.
pub fn check_bound(g: &MetricGraph, k: usize, spectrum: &Spectrum) -> Result<BoundReport, BoundError> {
    check_hypotheses(g)?;
    let bound = sharp_bound(k)?;
    let mu_value = spectrum.mu(k + 1).ok_or_else(|| {
        BoundError::BadParameter(format!("spectrum has no eigenvalue with index {}", k + 1))
    })?;
    let a = g.total_length() / g.edge_count() as f64;
    let a_squared = a * a;
    let product = mu_value * a_squared;
    let gap = bound - product;
    Ok(BoundReport {
        k,
        mu_value,
        a_squared,
        product,
        bound,
        gap,
        is_equality: gap.abs() <= EQUALITY_TOL * bound,
    })
}

/// [`check_bound`] with the spectrum computed by the secular solver.
pub fn check_bound_secular(g: &MetricGraph, k: usize, opts: &SecularOptions) -> Result<BoundReport, BoundError> {
    check_hypotheses(g)?;
    sharp_bound(k)?;
    let s = compute_spectrum_secular(g, k + 1, opts)?;
    check_bound(g, k, &s)
}

/// `(k - 1 + |boundary| / 2)^2 pi^2 / L^2`, where the boundary is the set of
/// degree-one vertices.
pub fn bkkm_bound(g: &MetricGraph, k: usize) -> Result<f64, BoundError> {
    if !g.is_tree() {
        return Err(BoundError::NotATree);
    }
    if k == 0 {
        return Err(BoundError::BadParameter("k must be at least 1".into()));
    }
    let boundary = g.degrees().iter().filter(|&&d| d == 1).count();
    let m = k as f64 - 1.0 + boundary as f64 / 2.0;
    let l = g.total_length();
    Ok(m * m * PI * PI / (l * l))
}

/// `mu_{k+1} A^2` of an interval, `k^2 pi^2`.
pub fn interval_product(k: usize) -> f64 {
    let k = k as f64;
    k * k * PI * PI
}
