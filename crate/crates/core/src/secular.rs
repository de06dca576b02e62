//! Eigenvalues from the wave-matching (secular) system.
//!
//! On every edge an eigenfunction for `mu = kappa^2 > 0` has the form
//! `f_e(x) = a_e cos(kappa x) + b_e sin(kappa x)`. Continuity and the
//! Kirchhoff condition at the vertices are `2E` linear conditions on the
//! `2E` coefficients, collected in `M(kappa)`. `mu` is an eigenvalue exactly
//! when `M(kappa)` is singular, and its multiplicity is the nullity.
//!
//! The solver tracks the smallest singular value of the row-normalized
//! matrix on a grid, refines every dip, and cross-checks the number of
//! eigenvalues found against a finite-element inertia count.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::SolverError;
use crate::fem::{self, bunch_kaufman_inertia};
use crate::graph::MetricGraph;
use crate::spectrum::{spectrum_of_union, Method, SpectralEntry, Spectrum};

#[derive(Debug, Clone)]
pub struct SecularOptions {
    /// final bracket width for each root, in kappa
    pub refine_tol: f64,
    /// a refined dip is a root when the normalized smallest singular value
    /// falls below this
    pub detect_threshold: f64,
    /// singular values below this count towards the multiplicity
    pub nullity_tol: f64,
    /// grid step is `pi / (grid_density * L)`
    pub grid_density: f64,
    /// eigenvalues located beyond the requested count, used to place the
    /// finite-element check in a spectral gap
    pub extra: usize,
    pub verify_with_fem: bool,
    /// grid halvings tried after a count mismatch before giving up
    pub max_retries: usize,
}

impl Default for SecularOptions {
    fn default() -> Self {
        SecularOptions {
            refine_tol: 1e-12,
            detect_threshold: 1e-6,
            nullity_tol: 1e-6,
            grid_density: 12.0,
            extra: 2,
            verify_with_fem: true,
            max_retries: 5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum End {
    /// x = 0
    Start,
    /// x = L(e)
    Finish,
}

/// The wave-matching system of a connected graph.
///
/// Columns `2i, 2i + 1` hold `(a_i, b_i)` of edge `i`. For each vertex, in
/// index order, there are `deg - 1` continuity rows (trace at the first
/// incident end minus trace at each other end) followed by one Kirchhoff row
/// (sum of the derivatives at the incident ends, each oriented into its edge).
#[derive(Debug, Clone)]
pub struct SecularSystem {
    graph: MetricGraph,
    ends: Vec<Vec<(usize, End)>>,
}

impl SecularSystem {
    pub fn new(g: &MetricGraph) -> Result<Self, SolverError> {
        if !g.is_connected() {
            return Err(SolverError::NotConnected {
                components: g.component_count(),
            });
        }
        let ends = (0..g.vertex_count())
            .map(|v| {
                g.incident_edges(v)
                    .iter()
                    .map(|&i| {
                        let end = if g.edge(i).u == v { End::Start } else { End::Finish };
                        (i, end)
                    })
                    .collect()
            })
            .collect();
        Ok(SecularSystem {
            graph: g.clone(),
            ends,
        })
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        2 * self.graph.edge_count()
    }

    /// `M(kappa)` without normalization.
    pub fn matrix(&self, kappa: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut row = 0;
        for ends in &self.ends {
            let (e0, end0) = ends[0];
            let t0 = self.trace(e0, end0, kappa);
            for &(e, end) in &ends[1..] {
                let t = self.trace(e, end, kappa);
                m[(row, 2 * e0)] += t0[0];
                m[(row, 2 * e0 + 1)] += t0[1];
                m[(row, 2 * e)] -= t[0];
                m[(row, 2 * e + 1)] -= t[1];
                row += 1;
            }
            for &(e, end) in ends {
                let d = self.derivative(e, end, kappa);
                m[(row, 2 * e)] += d[0];
                m[(row, 2 * e + 1)] += d[1];
            }
            row += 1;
        }
        debug_assert_eq!(row, n);
        m
    }

    /// `M(kappa)` with every row scaled to unit Euclidean norm.
    pub fn normalized_matrix(&self, kappa: f64) -> DMatrix<f64> {
        let mut m = self.matrix(kappa);
        for mut r in m.row_iter_mut() {
            let norm = r.norm();
            if norm > 0.0 {
                r /= norm;
            }
        }
        m
    }

    /// Singular values of the normalized matrix, ascending.
    pub fn singular_values(&self, kappa: f64) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .normalized_matrix(kappa)
            .singular_values()
            .iter()
            .copied()
            .collect();
        s.sort_by(f64::total_cmp);
        s
    }

    pub fn smallest_singular_value(&self, kappa: f64) -> f64 {
        self.normalized_matrix(kappa)
            .singular_values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Number of eigenvalues below `kappa^2`, zero included.
    ///
    /// Eliminating the edge interiors splits the energy form into the
    /// Dirichlet problems on the edges and a `V x V` vertex form, so the
    /// count is the number of edge Dirichlet eigenvalues below `kappa^2`
    /// plus the negative inertia of the vertex form. Returns `None` close to
    /// an edge Dirichlet eigenvalue or an eigenvalue of the graph.
    pub fn count_below(&self, kappa: f64) -> Option<usize> {
        if !(kappa > 0.0) {
            return Some(0);
        }
        let g = &self.graph;
        let n = g.vertex_count();
        let mut q = DMatrix::zeros(n, n);
        let mut dirichlet = 0usize;
        for e in g.edges() {
            let x = kappa * e.length;
            let (s, c) = x.sin_cos();
            if s.abs() < 1e-13 {
                return None;
            }
            dirichlet += (x / PI).floor() as usize;
            let (cot, csc) = (kappa * c / s, kappa / s);
            q[(e.u, e.u)] += cot;
            q[(e.v, e.v)] += cot;
            q[(e.u, e.v)] -= csc;
            q[(e.v, e.u)] -= csc;
        }
        let inertia = bunch_kaufman_inertia(&q);
        (inertia.zero == 0).then_some(dirichlet + inertia.negative)
    }

    /// [`Self::count_below`] at `kappa` or, if that is unreliable, at the
    /// nearest reliable point found by tiny nudges.
    pub fn count_near(&self, kappa: f64) -> usize {
        let h = 1e-11 * kappa.max(1.0);
        for j in 0..64 {
            let d = h * f64::from(j / 2 + 1) * if j % 2 == 0 { 1.0 } else { -1.0 };
            let x = if j == 0 { kappa } else { kappa + d };
            if let Some(n) = self.count_below(x) {
                return n;
            }
        }
        panic!("no reliable eigenvalue count near kappa = {kappa}")
    }

    /// A reliable count at or near `mid`, staying strictly inside `(a, b)`.
    fn count_between(&self, mid: f64, a: f64, b: f64) -> Option<(f64, usize)> {
        let h = (b - a) / 64.0;
        for j in 0..31 {
            let d = h * f64::from((j + 1) / 2) * if j % 2 == 0 { 1.0 } else { -1.0 };
            let x = mid + d;
            if x <= a || x >= b {
                continue;
            }
            if let Some(n) = self.count_below(x) {
                return Some((x, n));
            }
        }
        None
    }

    fn trace(&self, e: usize, end: End, kappa: f64) -> [f64; 2] {
        match end {
            End::Start => [1.0, 0.0],
            End::Finish => {
                let (s, c) = (kappa * self.graph.edge(e).length).sin_cos();
                [c, s]
            }
        }
    }

    fn derivative(&self, e: usize, end: End, kappa: f64) -> [f64; 2] {
        match end {
            End::Start => [0.0, kappa],
            End::Finish => {
                let (s, c) = (kappa * self.graph.edge(e).length).sin_cos();
                [kappa * s, -kappa * c]
            }
        }
    }
}

/// `M(kappa)` for a connected graph.
pub fn assemble_secular_matrix(g: &MetricGraph, kappa: f64) -> Result<DMatrix<f64>, SolverError> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(SolverError::NonPositiveKappa(kappa));
    }
    Ok(SecularSystem::new(g)?.matrix(kappa))
}

/// Number of singular values of the normalized `M(kappa)` below `tol`.
pub fn secular_nullity(g: &MetricGraph, kappa: f64, tol: f64) -> Result<usize, SolverError> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(SolverError::NonPositiveKappa(kappa));
    }
    let sys = SecularSystem::new(g)?;
    Ok(sys.singular_values(kappa).iter().filter(|&&s| s < tol).count())
}

/// Minimizer of a function with a V-shaped minimum inside `[a, b]`.
///
/// Golden-section search, accelerated by a V-shaped fit through the three
/// best points whenever that step is safe (Brent's safeguards, with the
/// parabola replaced by two lines of equal and opposite slope). Returns the
/// minimizer, its value and the final bracket width.
pub(crate) fn golden_v_minimize(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64, f64) {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let xm = 0.5 * (a + b);
        let tol1 = tol.max(4.0 * f64::EPSILON * x.abs());
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            if let Some(u) = v_fit(x, fx, w, fw, v, fv) {
                let step = u - x;
                if u > a + tol1 && u < b - tol1 && step.abs() < 0.5 * e.abs() {
                    e = d;
                    d = step;
                    golden = false;
                }
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx, b - a)
}

/// Apex of the V `c |t - t0|` best matching three samples: two of them are
/// taken to lie on one flank, the third checks the fit.
fn v_fit(x: f64, fx: f64, w: f64, fw: f64, v: f64, fv: f64) -> Option<f64> {
    let pts = [(x, fx), (w, fw), (v, fv)];
    let mut best: Option<(f64, f64)> = None;
    for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
        let (p, q, r) = (pts[i], pts[j], pts[k]);
        if p.0 == q.0 || p.1 == q.1 {
            continue;
        }
        let slope = (q.1 - p.1) / (q.0 - p.0);
        let t0 = p.0 - p.1 / slope;
        let c = slope.abs();
        let misfit = (c * (r.0 - t0).abs() - r.1).abs();
        if best.is_none_or(|(_, m)| misfit < m) {
            best = Some((t0, misfit));
        }
    }
    best.map(|(t0, _)| t0).filter(|t| t.is_finite())
}

/// A refined root of the secular system.
#[derive(Debug, Clone, Copy)]
struct Root {
    kappa: f64,
    width: f64,
    mult: usize,
}

struct Scan<'a> {
    sys: &'a SecularSystem,
    opts: &'a SecularOptions,
    step: f64,
    start: f64,
    limit: f64,
    kappas: Vec<f64>,
    vals: Vec<f64>,
    roots: Vec<Root>,
}

impl<'a> Scan<'a> {
    fn new(sys: &'a SecularSystem, opts: &'a SecularOptions, step: f64, needed: usize) -> Self {
        let l = sys.graph().total_length();
        // every positive eigenvalue of a connected graph is at least pi^2/L^2
        let start = 0.5 * PI / l;
        let edges = sys.graph().edge_count();
        Scan {
            sys,
            opts,
            step,
            start,
            limit: PI * (2 * needed + 4 * edges + 8) as f64 / l,
            kappas: Vec::new(),
            vals: Vec::new(),
            roots: Vec::new(),
        }
    }

    fn found(&self) -> usize {
        self.roots.iter().map(|r| r.mult).sum()
    }

    /// Located positive eigenvalues, reconciled with the exact count.
    fn run(&mut self, needed: usize) -> Result<Vec<Root>, SolverError> {
        loop {
            self.grow(needed)?;
            self.reconcile();
            if self.found() >= needed {
                return Ok(self.roots.clone());
            }
        }
    }

    /// Walks the grid upward until `needed` positive eigenvalues (with
    /// multiplicity) are known.
    fn grow(&mut self, needed: usize) -> Result<(), SolverError> {
        let sys = self.sys;
        let f = |k: f64| sys.smallest_singular_value(k);
        if self.kappas.is_empty() {
            for k in [self.start, self.start + self.step] {
                self.kappas.push(k);
                self.vals.push(f(k));
            }
        }
        while self.found() < needed {
            let next = self.kappas[self.kappas.len() - 1] + self.step;
            if next > self.limit {
                return Err(SolverError::ConvergenceFailure(format!(
                    "located {} of {needed} positive eigenvalues below kappa = {:.6}",
                    self.found(),
                    self.limit
                )));
            }
            self.kappas.push(next);
            self.vals.push(f(next));
            let i = self.kappas.len() - 2;
            let (vals, kappas) = (&self.vals, &self.kappas);
            if !(vals[i] < vals[i - 1] && vals[i] <= vals[i + 1]) {
                continue;
            }
            let tol = self.opts.refine_tol / 4.0;
            let (k, s, width) = golden_v_minimize(f, kappas[i - 1], kappas[i + 1], tol);
            if s >= self.opts.detect_threshold {
                continue;
            }
            let nullity = sys
                .singular_values(k)
                .iter()
                .filter(|&&sv| sv < self.opts.nullity_tol)
                .count()
                .max(1);
            self.insert(Root {
                kappa: k,
                width,
                mult: nullity,
            });
        }
        Ok(())
    }

    fn insert(&mut self, root: Root) {
        let k = root.kappa;
        match self
            .roots
            .iter_mut()
            .find(|r| (r.kappa - k).abs() <= 1e-9 * k.max(1.0))
        {
            Some(r) => r.mult = r.mult.max(root.mult),
            None => {
                self.roots.push(root);
                self.roots.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
            }
        }
    }

    /// Checks every located root against jumps of the exact counting
    /// function. Where they disagree, or where a multiple root might hide a
    /// split, the jumps are located by bisection on the count and replace the
    /// scanned roots.
    fn reconcile(&mut self) {
        if self.roots.is_empty() {
            return;
        }
        let sys = self.sys;
        let n = self.roots.len();
        let mut checks = Vec::with_capacity(n + 1);
        checks.push(self.start);
        for w in self.roots.windows(2) {
            checks.push(0.5 * (w[0].kappa + w[1].kappa));
        }
        checks.push(self.roots[n - 1].kappa + 0.5 * self.step);
        let counts: Vec<usize> = checks.iter().map(|&c| sys.count_near(c)).collect();

        let mut out: Vec<Root> = Vec::with_capacity(n);
        if counts[0] != 1 {
            let lo = 1e-3 * self.start;
            out.extend(self.locate(lo, 1, checks[0], counts[0]));
        }
        for (i, r) in self.roots.iter().enumerate() {
            let jump = counts[i + 1] as i64 - counts[i] as i64;
            if jump == 1 && r.mult == 1 {
                out.push(*r);
                continue;
            }
            let located = self.locate(checks[i], counts[i], checks[i + 1], counts[i + 1]);
            if located.len() == 1 && located[0].mult == r.mult {
                out.push(*r);
            } else {
                out.extend(located);
            }
        }
        self.roots = out;
    }

    /// Jumps of the count in `(lo, hi)`, by bisection.
    fn locate(&self, lo: f64, n_lo: usize, hi: f64, n_hi: usize) -> Vec<Root> {
        let sys = self.sys;
        let mut jumps: Vec<(f64, f64, i64)> = Vec::new();
        let mut stack = vec![(lo, n_lo, hi, n_hi)];
        while let Some((a, na, b, nb)) = stack.pop() {
            if na == nb {
                continue;
            }
            let tol = self.opts.refine_tol.max(8.0 * f64::EPSILON * b);
            if b - a <= tol {
                jumps.push((0.5 * (a + b), b - a, nb as i64 - na as i64));
                continue;
            }
            let mid = 0.5 * (a + b);
            let Some((m, nm)) = sys.count_between(mid, a, b) else {
                jumps.push((mid, b - a, nb as i64 - na as i64));
                continue;
            };
            stack.push((a, na, m, nm));
            stack.push((m, nm, b, nb));
        }
        jumps.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64, i64)> = Vec::new();
        for (k, w, j) in jumps {
            match merged.last_mut() {
                Some(last) if k - last.0 <= 1e-10 * k.max(1.0) => {
                    last.1 = last.1.max(w + (k - last.0));
                    last.2 += j;
                }
                _ => merged.push((k, w, j)),
            }
        }
        merged
            .into_iter()
            .filter(|&(_, _, j)| j > 0)
            .map(|(kappa, width, j)| Root {
                kappa,
                width,
                mult: j as usize,
            })
            .collect()
    }
}

fn roots_to_spectrum(roots: &[Root], refine_tol: f64) -> Spectrum {
    let mut entries = vec![SpectralEntry {
        mu: 0.0,
        mult: 1,
        error: 0.0,
    }];
    for r in roots {
        entries.push(SpectralEntry {
            mu: r.kappa * r.kappa,
            mult: r.mult,
            error: 2.0 * r.kappa * r.width.max(refine_tol),
        });
    }
    Spectrum::new(entries, Method::Secular)
}

/// Finite-element count check in the widest relative gap at or beyond the
/// `count`-th eigenvalue. Returns `(sigma, secular count, fem count)`.
fn fem_count_check(
    g: &MetricGraph,
    spectrum: &Spectrum,
    count: usize,
) -> Result<(f64, usize, usize), SolverError> {
    let entries = spectrum.entries();
    let first = entries
        .iter()
        .scan(0, |seen, e| {
            *seen += e.mult;
            Some(*seen)
        })
        .position(|seen| seen >= count)
        .expect("spectrum holds the requested count");
    let (gap_at, _) = (first..entries.len() - 1)
        .map(|j| (j, (entries[j + 1].mu - entries[j].mu) / entries[j + 1].mu))
        .fold((first, f64::NEG_INFINITY), |best, cand| {
            if cand.1 > best.1 {
                cand
            } else {
                best
            }
        });
    let below = entries[gap_at].mu;
    let sigma = 0.5 * (below + entries[gap_at + 1].mu);
    let secular = spectrum.count_below(sigma);

    // P1 eigenvalues overshoot by about mu^2 h^2 / 12; keep that under a
    // quarter of the gap with a safety factor of four.
    let mut h = (1.0 / sigma.sqrt()).min(g.min_edge_length() / 2.0);
    if below > 0.0 {
        h = h.min((1.5 * (sigma - below) / (below * below)).sqrt());
    }
    let dofs = g.total_length() / h;
    if dofs > 2.0e6 {
        return Err(SolverError::ConvergenceFailure(format!(
            "spectral gap at sigma = {sigma} too narrow for the finite-element check"
        )));
    }
    let op = fem::discretize(g, h);
    let fem_count = fem::count_below(&op, sigma)?;
    Ok((sigma, secular, fem_count))
}

/// First `count` eigenvalues of a connected graph (the last listed
/// eigenvalue keeps its full multiplicity).
pub fn compute_spectrum_secular(
    g: &MetricGraph,
    count: usize,
    opts: &SecularOptions,
) -> Result<Spectrum, SolverError> {
    if count == 0 {
        return Err(SolverError::BadParameter("count must be at least 1".into()));
    }
    let sys = SecularSystem::new(g)?;
    let needed = count - 1 + opts.extra.max(1);
    let base_step = PI / (opts.grid_density * g.total_length());
    let mut mismatch = None;
    for attempt in 0..=opts.max_retries {
        let step = base_step / f64::from(1u32 << attempt);
        let mut wanted = needed;
        let roots = loop {
            let roots = Scan::new(&sys, opts, step, wanted).run(wanted)?;
            // the count check needs a gap above the entry holding `count`
            let total = 1 + roots.iter().map(|r| r.mult).sum::<usize>();
            let last = roots.last().map_or(1, |r| r.mult);
            if !opts.verify_with_fem || total - last >= count {
                break roots;
            }
            wanted = total + 1;
        };
        let full = roots_to_spectrum(&roots, opts.refine_tol);
        if !opts.verify_with_fem {
            return Ok(full.truncated(count));
        }
        let (sigma, secular, fem_count) = fem_count_check(g, &full, count)?;
        if secular == fem_count {
            return Ok(full.truncated(count));
        }
        mismatch = Some(SolverError::CountMismatch {
            sigma,
            secular,
            fem: fem_count,
        });
    }
    Err(mismatch.expect("at least one attempt ran"))
}

/// The `j`-th eigenvalue (1-based, so `j = 1` is the zero eigenvalue) of a
/// connected graph, by bisection on the exact eigenvalue count in kappa down
/// to a bracket of width `tol`.
pub fn secular_eigenvalue(g: &MetricGraph, j: usize, tol: f64) -> Result<f64, SolverError> {
    if j == 0 {
        return Err(SolverError::BadParameter("eigenvalue index is 1-based".into()));
    }
    let sys = SecularSystem::new(g)?;
    if j == 1 {
        return Ok(0.0);
    }
    let mut lo = 0.5 * PI / g.total_length();
    let mut hi = 2.0 * lo;
    let mut n_hi = sys.count_near(hi);
    while n_hi < j {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(SolverError::ConvergenceFailure(format!("no bracket for eigenvalue {j}")));
        }
        n_hi = sys.count_near(hi);
    }
    // invariant: count(lo) < j <= count(hi)
    loop {
        let width = tol.max(8.0 * f64::EPSILON * hi);
        if hi - lo <= width {
            break;
        }
        let Some((m, n)) = sys.count_between(0.5 * (lo + hi), lo, hi) else {
            break;
        };
        if n >= j {
            hi = m;
        } else {
            lo = m;
        }
    }
    let kappa = 0.5 * (lo + hi);
    Ok(kappa * kappa)
}

/// Like [`compute_spectrum_secular`] but accepts disconnected graphs, whose
/// spectrum is the union of the component spectra.
pub fn compute_spectrum_any(
    g: &MetricGraph,
    count: usize,
    opts: &SecularOptions,
) -> Result<Spectrum, SolverError> {
    if g.is_connected() {
        return compute_spectrum_secular(g, count, opts);
    }
    let parts = g
        .components()
        .iter()
        .map(|c| compute_spectrum_secular(c, count, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(spectrum_of_union(&parts, 1e-9).truncated(count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_equilateral_star, make_extremal_star, make_path, make_star};

    #[test]
    fn interval_matrix_rows() {
        let g = make_path(1.0).unwrap();
        let sys = SecularSystem::new(&g).unwrap();
        let k = 0.7;
        let m = sys.normalized_matrix(k);
        assert_eq!(m.nrows(), 2);
        assert!((m[(0, 0)]).abs() < 1e-15 && (m[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((m[(1, 0)] - k.sin()).abs() < 1e-15);
        assert!((m[(1, 1)] + k.cos()).abs() < 1e-15);
    }

    #[test]
    fn matrix_is_square_with_expected_rows() {
        let g = make_star(&[1.0, 2.0, 3.0, 0.5]).unwrap();
        let m = assemble_secular_matrix(&g, 1.3).unwrap();
        assert_eq!(m.shape(), (8, 8));
        assert!(m.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn star_nullities() {
        let g = make_equilateral_star(3, 3.0).unwrap();
        assert_eq!(secular_nullity(&g, PI / 2.0, 1e-8).unwrap(), 2);
        assert_eq!(secular_nullity(&g, PI, 1e-8).unwrap(), 1);
        assert_eq!(secular_nullity(&g, 1.0, 1e-8).unwrap(), 0);
    }

    #[test]
    fn extremal_star_double_root() {
        let g = make_extremal_star(2, 1.0).unwrap();
        assert_eq!(secular_nullity(&g, 2.5 * PI, 1e-8).unwrap(), 2);
    }

    #[test]
    fn path_nullities() {
        assert_eq!(secular_nullity(&make_path(1.0).unwrap(), PI / 2.0, 1e-8).unwrap(), 0);
        assert_eq!(secular_nullity(&make_path(2.0).unwrap(), PI / 2.0, 1e-8).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_kappa_and_disconnected() {
        let g = make_path(1.0).unwrap();
        assert!(matches!(
            assemble_secular_matrix(&g, 0.0),
            Err(SolverError::NonPositiveKappa(_))
        ));
        let d = crate::graph::build_graph(
            4,
            vec![
                crate::graph::Edge::new(0, 1, 1.0),
                crate::graph::Edge::new(2, 3, 1.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            assemble_secular_matrix(&d, 1.0),
            Err(SolverError::NotConnected { components: 2 })
        ));
    }

    #[test]
    fn golden_v_on_exact_v() {
        let (x, fx, _) = golden_v_minimize(|t| 3.0 * (t - 0.123456789).abs(), 0.0, 1.0, 1e-13);
        assert!((x - 0.123456789).abs() < 1e-12);
        assert!(fx < 1e-11);
    }

    #[test]
    fn golden_v_on_smooth_minimum() {
        let (x, _, _) = golden_v_minimize(|t| (t - 2.0).powi(2) + 1.0, 0.0, 5.0, 1e-10);
        assert!((x - 2.0).abs() < 1e-6);
    }

    #[test]
    fn interval_spectrum() {
        let s = compute_spectrum_secular(&make_path(1.0).unwrap(), 4, &SecularOptions::default()).unwrap();
        let vals = s.flattened();
        for (j, v) in vals.iter().enumerate() {
            let exact = (j as f64 * PI).powi(2);
            assert!((v - exact).abs() <= 1e-10 * exact.max(1.0), "{j}: {v}");
        }
    }

    /// Positive roots of `sum tan(kappa l_e) = 0` for a star with distinct
    /// arms: exactly one between consecutive poles `(m + 1/2) pi / l_e`.
    fn star_oracle(lengths: &[f64], n: usize) -> Vec<f64> {
        let mut poles: Vec<f64> = lengths
            .iter()
            .flat_map(|&l| (0..4 * n + 4).map(move |m| (m as f64 + 0.5) * PI / l))
            .collect();
        poles.sort_by(f64::total_cmp);
        let f = |k: f64| lengths.iter().map(|&l| (k * l).tan()).sum::<f64>();
        poles
            .windows(2)
            .take(n)
            .map(|w| {
                let (mut a, mut b) = (w[0], w[1]);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if f(m) < 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }

    #[test]
    fn random_stars_match_tangent_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let arms = rng.random_range(3..=5);
            let lengths: Vec<f64> = (0..arms).map(|_| rng.random_range(0.1..1.0)).collect();
            let g = make_star(&lengths).unwrap();
            let s = compute_spectrum_secular(&g, 9, &SecularOptions::default()).unwrap();
            let want = star_oracle(&lengths, 8);
            for (j, k) in want.iter().enumerate() {
                let mu = k * k;
                let got = s.mu(j + 2).unwrap();
                assert!((got - mu).abs() <= 1e-10 * mu, "{lengths:?} j={j}: {got} vs {mu}");
            }
        }
    }

    #[test]
    fn nearly_double_roots_are_split() {
        for d in [1e-9, 1e-7, 1e-5, 1e-3] {
            let lengths = [0.6, 0.2 + d, 0.2 - d];
            let g = make_star(&lengths).unwrap();
            let s = compute_spectrum_secular(&g, 5, &SecularOptions::default()).unwrap();
            let want = star_oracle(&lengths, 4);
            for (j, k) in want.iter().enumerate() {
                let mu = k * k;
                let got = s.mu(j + 2).unwrap();
                assert!((got - mu).abs() <= 1e-9 * mu, "d={d} j={j}: {got} vs {mu}");
            }
        }
    }

    #[test]
    fn exact_count_on_interval_and_star() {
        let sys = SecularSystem::new(&make_path(1.0).unwrap()).unwrap();
        assert_eq!(sys.count_below(0.5), Some(1));
        assert_eq!(sys.count_below(PI + 0.1), Some(2));
        assert_eq!(sys.count_below(3.0 * PI - 0.1), Some(3));
        let sys = SecularSystem::new(&make_equilateral_star(3, 3.0).unwrap()).unwrap();
        // 0, (pi/2)^2 x2, pi^2, (3pi/2)^2 x2
        assert_eq!(sys.count_near(1.0), 1);
        assert_eq!(sys.count_near(2.0), 3);
        assert_eq!(sys.count_near(3.5), 4);
        assert_eq!(sys.count_near(5.0), 6);
    }

    #[test]
    fn eigenvalue_by_count_matches_scan() {
        for seed in 0..30 {
            let g = crate::graph::make_random_series_reduced_tree(3 + seed as usize % 6, seed, 0.02).unwrap();
            let s = compute_spectrum_secular(&g, 8, &SecularOptions::default()).unwrap();
            for j in 1..=8 {
                let a = s.mu(j).unwrap();
                let b = secular_eigenvalue(&g, j, 1e-13).unwrap();
                assert!((a - b).abs() <= 1e-10 * a.max(1.0), "seed {seed} j {j}: {a} vs {b}");
            }
        }
        let g = make_extremal_star(3, 1.0).unwrap();
        let want = 49.0 * PI * PI / 4.0;
        for j in [4, 5] {
            let got = secular_eigenvalue(&g, j, 1e-13).unwrap();
            assert!((got - want).abs() <= 1e-11 * want);
        }
    }

    #[test]
    fn weyl_remainder_is_bounded() {
        for seed in 0..10 {
            let g = crate::graph::make_random_series_reduced_tree(3 + seed as usize % 6, seed, 0.02).unwrap();
            let s = compute_spectrum_secular(&g, 25, &SecularOptions::default()).unwrap();
            let bound = (g.edge_count() + g.vertex_count()) as f64;
            let l = g.total_length();
            let top = s.flattened().last().unwrap().sqrt();
            for i in 1..200 {
                let kappa = top * i as f64 / 200.0;
                let n = s.count_below(kappa * kappa) as f64;
                assert!((n - kappa * l / PI).abs() <= bound);
            }
        }
    }

    #[test]
    fn scan_count_matches_exact_count() {
        for seed in 0..20 {
            let g = crate::graph::make_random_series_reduced_tree(3 + seed as usize % 6, seed, 0.02).unwrap();
            let s = compute_spectrum_secular(&g, 12, &SecularOptions::default()).unwrap();
            let sys = SecularSystem::new(&g).unwrap();
            let vals = s.flattened();
            for w in vals.windows(2) {
                if w[1] > w[0] * (1.0 + 1e-8) {
                    let mid = 0.5 * (w[0] + w[1]);
                    assert_eq!(sys.count_near(mid.sqrt()), s.count_below(mid));
                }
            }
        }
    }

    #[test]
    fn count_ending_inside_a_multiple_eigenvalue() {
        // 5-star with unit arms: index 12 falls in the fourfold (5 pi / 2)^2
        let g = make_equilateral_star(5, 5.0).unwrap();
        let s = compute_spectrum_secular(&g, 12, &SecularOptions::default()).unwrap();
        let e = s.entry_at(12).unwrap();
        assert_eq!(e.mult, 4);
        assert!((e.mu - 6.25 * PI * PI).abs() < 1e-9);
    }
}
