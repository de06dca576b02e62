//! Discrete eigenvalues by inertia bisection, polished by inverse iteration,
//! then Richardson-extrapolated across uniformly refined meshes.

use nalgebra::DVector;

use super::inertia::{count_below, StructuredFactor};
use super::{discretize_segments, DiscreteOperator, DENSE_DOF_LIMIT};
use crate::error::SolverError;
use crate::graph::MetricGraph;
use crate::spectrum::{cluster_sorted, Method, Spectrum};

#[derive(Debug, Clone)]
pub struct FemOptions {
    /// target element size on the coarsest level
    pub h: f64,
    /// number of meshes: h, h/2, ..., h/2^(levels-1)
    pub levels: usize,
    /// relative width at which bisection stops
    pub bisection_rel_tol: f64,
    /// eigenvalues closer than this multiple of their error estimate merge
    pub cluster_factor: f64,
}

impl Default for FemOptions {
    fn default() -> Self {
        FemOptions {
            h: 0.01,
            levels: 3,
            bisection_rel_tol: 1e-13,
            cluster_factor: 10.0,
        }
    }
}

/// Everything computed on the way to an extrapolated spectrum.
#[derive(Debug, Clone)]
pub struct FemReport {
    pub spectrum: Spectrum,
    /// largest element size per level
    pub mesh_sizes: Vec<f64>,
    /// discrete eigenvalues per level, with multiplicity
    pub raw: Vec<Vec<f64>>,
    pub extrapolated: Vec<f64>,
    pub error_estimates: Vec<f64>,
}

/// The `count` smallest generalized eigenvalues of `(K, M)`, with
/// multiplicity. Zero eigenvalues (one per component) are exact.
pub fn discrete_eigenvalues(op: &DiscreteOperator, count: usize) -> Result<Vec<f64>, SolverError> {
    discrete_eigenvalues_tol(op, count, FemOptions::default().bisection_rel_tol)
}

fn discrete_eigenvalues_tol(
    op: &DiscreteOperator,
    count: usize,
    rel_tol: f64,
) -> Result<Vec<f64>, SolverError> {
    if count > op.dof_count() {
        return Err(SolverError::BadParameter(format!(
            "requested {count} eigenvalues from {} degrees of freedom",
            op.dof_count()
        )));
    }
    let zeros = op.component_count().min(count);
    let mut out = vec![0.0; zeros];
    if count == zeros {
        return Ok(out);
    }
    // 12 / h^2 bounds every element Rayleigh quotient
    let h_min = (0..op.edge_count())
        .map(|e| op.element_size(e))
        .fold(f64::INFINITY, f64::min);
    let ceiling = 12.0 / (h_min * h_min) * (1.0 + 1e-9) + 1.0;
    let mut hi = 1.0f64;
    while count_below(op, hi)? < count {
        if hi > ceiling {
            return Err(SolverError::ConvergenceFailure(
                "no upper bracket for requested eigenvalues".into(),
            ));
        }
        hi *= 2.0;
    }
    let wanted = count - zeros;
    let mut lo_b = vec![0.0f64; wanted];
    let mut hi_b = vec![hi; wanted];
    for slot in 0..wanted {
        if slot > 0 {
            lo_b[slot] = lo_b[slot].max(lo_b[slot - 1]);
        }
        while hi_b[slot] - lo_b[slot] > rel_tol * hi_b[slot] {
            let mid = 0.5 * (lo_b[slot] + hi_b[slot]);
            if mid <= lo_b[slot] || mid >= hi_b[slot] {
                break;
            }
            let n = count_below(op, mid)?;
            // share the slice with every later bracket
            for s in slot..wanted {
                if n > zeros + s {
                    hi_b[s] = hi_b[s].min(mid);
                } else {
                    lo_b[s] = lo_b[s].max(mid);
                }
            }
        }
        out.push(polish(op, lo_b[slot], hi_b[slot]));
    }
    Ok(out)
}

enum ShiftedSolver {
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Structured(StructuredFactor),
}

/// A few steps of shifted inverse iteration from the bisection midpoint; the
/// Rayleigh quotient replaces the midpoint when it lands in the bracket.
fn polish(op: &DiscreteOperator, lo: f64, hi: f64) -> f64 {
    let shift = 0.5 * (lo + hi);
    let solver = if op.dof_count() < DENSE_DOF_LIMIT {
        ShiftedSolver::Dense(op.shifted_dense(shift).lu())
    } else {
        match StructuredFactor::new(op, shift) {
            Ok(f) => ShiftedSolver::Structured(f),
            Err(_) => return shift,
        }
    };
    let n = op.dof_count();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (0.7 * i as f64).sin()).collect();
    for _ in 0..3 {
        let b = op.mass.mul_vec(&x);
        let next = match &solver {
            ShiftedSolver::Dense(lu) => lu.solve(&DVector::from_vec(b)).map(|v| v.data.as_vec().clone()),
            ShiftedSolver::Structured(f) => f.solve(op, &b),
        };
        let Some(next) = next else { return shift };
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return shift;
        }
        x = next.into_iter().map(|v| v / norm).collect();
    }
    let rq = op.stiffness.quad_form(&x) / op.mass.quad_form(&x);
    let slack = (hi - lo).max(1e-15 * hi);
    if (rq - shift).abs() <= 2.0 * slack {
        rq
    } else {
        shift
    }
}

/// Extrapolated spectrum with the default bisection and clustering settings.
pub fn compute_spectrum_fem(
    g: &MetricGraph,
    count: usize,
    h: f64,
    levels: usize,
) -> Result<Spectrum, SolverError> {
    let opts = FemOptions {
        h,
        levels,
        ..FemOptions::default()
    };
    Ok(compute_spectrum_fem_report(g, count, &opts)?.spectrum)
}

/// First `count` eigenvalues on meshes `h, h/2, ...`, extrapolated assuming
/// an error expansion in even powers of the mesh size.
pub fn compute_spectrum_fem_report(
    g: &MetricGraph,
    count: usize,
    opts: &FemOptions,
) -> Result<FemReport, SolverError> {
    if count == 0 {
        return Err(SolverError::BadParameter("count must be at least 1".into()));
    }
    if opts.levels < 2 {
        return Err(SolverError::BadParameter("need at least two mesh levels".into()));
    }
    if !(opts.h > 0.0) {
        return Err(SolverError::BadParameter(format!("mesh size {}", opts.h)));
    }
    let base: Vec<usize> = g
        .edges()
        .iter()
        .map(|e| ((e.length / opts.h).ceil() as usize).max(2))
        .collect();
    let mut raw = Vec::with_capacity(opts.levels);
    let mut mesh_sizes = Vec::with_capacity(opts.levels);
    for level in 0..opts.levels {
        let segs: Vec<usize> = base.iter().map(|&n| n << level).collect();
        let op = discretize_segments(g, &segs);
        mesh_sizes.push(op.mesh_size());
        raw.push(discrete_eigenvalues_tol(&op, count, opts.bisection_rel_tol)?);
    }

    // Richardson table: stage s removes the h^(2s) term
    let mut table: Vec<Vec<Vec<f64>>> = vec![raw.clone()];
    for stage in 1..opts.levels {
        let prev = &table[stage - 1];
        let factor = 4f64.powi(stage as i32);
        let next: Vec<Vec<f64>> = (0..prev.len() - 1)
            .map(|l| {
                prev[l]
                    .iter()
                    .zip(&prev[l + 1])
                    .map(|(&coarse, &fine)| (factor * fine - coarse) / (factor - 1.0))
                    .collect()
            })
            .collect();
        table.push(next);
    }
    let top = &table[opts.levels - 1][0];
    let below = table[opts.levels - 2].last().unwrap();
    let extrapolated = top.clone();
    let error_estimates: Vec<f64> = top
        .iter()
        .zip(below)
        .map(|(&a, &b)| (a - b).abs() + opts.bisection_rel_tol * a.abs())
        .collect();
    for (j, (&mu, &err)) in extrapolated.iter().zip(&error_estimates).enumerate() {
        if !mu.is_finite() || !err.is_finite() {
            return Err(SolverError::ConvergenceFailure(format!(
                "non-finite extrapolation for eigenvalue {}",
                j + 1
            )));
        }
    }

    let mut pairs: Vec<(f64, f64)> = extrapolated
        .iter()
        .copied()
        .zip(error_estimates.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let factor = opts.cluster_factor;
    let entries = cluster_sorted(&pairs, |a, b| {
        (b.0 - a.0).abs() <= factor * a.1.max(b.1) + 1e-13 * a.0.abs().max(b.0.abs())
    });
    Ok(FemReport {
        spectrum: Spectrum::new(entries, Method::Fem),
        mesh_sizes,
        raw,
        extrapolated,
        error_estimates,
    })
}
