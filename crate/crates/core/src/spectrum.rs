//! Eigenvalue lists with multiplicities.

use serde::{Deserialize, Serialize};

/// Which computation produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Secular,
    Fem,
    Union,
}

/// One distinct eigenvalue `mu` with its multiplicity and an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEntry {
    pub mu: f64,
    pub mult: usize,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct WireEntry {
    mu: f64,
    mult: usize,
}

/// Nondecreasing eigenvalues, grouped by multiplicity.
///
/// Indices used by [`Spectrum::mu`] are 1-based and count multiplicity, so
/// `mu(1) = 0` for every connected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    entries: Vec<SpectralEntry>,
    method: Method,
}

impl Spectrum {
    /// Entries must be sorted with strictly increasing values.
    pub fn new(entries: Vec<SpectralEntry>, method: Method) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].mu < w[1].mu));
        debug_assert!(entries.iter().all(|e| e.mult > 0));
        Spectrum { entries, method }
    }

    pub fn empty(method: Method) -> Self {
        Spectrum {
            entries: Vec::new(),
            method,
        }
    }

    pub fn entries(&self) -> &[SpectralEntry] {
        &self.entries
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of eigenvalues counted with multiplicity.
    pub fn len(&self) -> usize {
        self.entries.iter().map(|e| e.mult).sum()
    }

    /// `mu_j`, 1-based, counting multiplicity.
    pub fn mu(&self, j: usize) -> Option<f64> {
        self.entry_at(j).map(|e| e.mu)
    }

    /// The entry containing `mu_j`.
    pub fn entry_at(&self, j: usize) -> Option<&SpectralEntry> {
        if j == 0 {
            return None;
        }
        let mut seen = 0;
        for e in &self.entries {
            seen += e.mult;
            if seen >= j {
                return Some(e);
            }
        }
        None
    }

    /// Every eigenvalue repeated according to multiplicity.
    pub fn flattened(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.mu, e.mult))
            .collect()
    }

    /// Number of listed eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        self.entries
            .iter()
            .filter(|e| e.mu < sigma)
            .map(|e| e.mult)
            .sum()
    }

    /// Keeps the smallest entries until at least `count` eigenvalues are
    /// listed; the last kept entry keeps its full multiplicity.
    pub fn truncated(&self, count: usize) -> Spectrum {
        let mut kept = Vec::new();
        let mut seen = 0;
        for e in &self.entries {
            if seen >= count {
                break;
            }
            seen += e.mult;
            kept.push(*e);
        }
        Spectrum::new(kept, self.method)
    }

    /// Every eigenvalue divided by `s^2`, the effect of scaling all lengths
    /// by `s`.
    pub fn rescaled(&self, s: f64) -> Spectrum {
        let f = 1.0 / (s * s);
        let entries = self
            .entries
            .iter()
            .map(|e| SpectralEntry {
                mu: e.mu * f,
                mult: e.mult,
                error: e.error * f,
            })
            .collect();
        Spectrum::new(entries, self.method)
    }

    /// `[{"mu": .., "mult": ..}, ...]`
    pub fn to_json(&self) -> String {
        let wire: Vec<WireEntry> = self
            .entries
            .iter()
            .map(|e| WireEntry {
                mu: e.mu,
                mult: e.mult,
            })
            .collect();
        serde_json::to_string(&wire).expect("spectrum serialization cannot fail")
    }

    pub fn from_json(text: &str, method: Method) -> Result<Spectrum, serde_json::Error> {
        let wire: Vec<WireEntry> = serde_json::from_str(text)?;
        let entries = wire
            .into_iter()
            .map(|w| SpectralEntry {
                mu: w.mu,
                mult: w.mult,
                error: 0.0,
            })
            .collect();
        Ok(Spectrum { entries, method })
    }
}

/// Groups sorted `(mu, error)` values whose gaps fall within `tol(a, b)` into
/// entries. Group value is the mean, error the largest member error plus the
/// spread.
pub(crate) fn cluster_sorted(
    values: &[(f64, f64)],
    within: impl Fn(&(f64, f64), &(f64, f64)) -> bool,
) -> Vec<SpectralEntry> {
    let mut out: Vec<SpectralEntry> = Vec::new();
    let mut group: Vec<(f64, f64)> = Vec::new();
    let flush = |group: &mut Vec<(f64, f64)>, out: &mut Vec<SpectralEntry>| {
        if group.is_empty() {
            return;
        }
        let n = group.len() as f64;
        let mean = group.iter().map(|g| g.0).sum::<f64>() / n;
        let spread = group.last().unwrap().0 - group[0].0;
        let err = group.iter().map(|g| g.1).fold(0.0, f64::max) + spread;
        out.push(SpectralEntry {
            mu: mean,
            mult: group.len(),
            error: err,
        });
        group.clear();
    };
    for v in values {
        if let Some(last) = group.last() {
            if !within(last, v) {
                flush(&mut group, &mut out);
            }
        }
        group.push(*v);
    }
    flush(&mut group, &mut out);
    out
}

/// Spectrum of a disjoint union: all eigenvalues merged, coincident values
/// (within `rel_tol` relative) combined with summed multiplicity. The result
/// stops at the smallest top eigenvalue among the non-empty inputs, beyond
/// which the union would be incomplete.
pub fn spectrum_of_union(spectra: &[Spectrum], rel_tol: f64) -> Spectrum {
    let coverage = spectra
        .iter()
        .filter_map(|s| s.entries.last().map(|e| e.mu))
        .fold(f64::INFINITY, f64::min);
    let mut all: Vec<SpectralEntry> = spectra
        .iter()
        .flat_map(|s| s.entries.iter().copied())
        .filter(|e| e.mu <= coverage * (1.0 + rel_tol))
        .collect();
    all.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    let mut merged: Vec<SpectralEntry> = Vec::new();
    for e in all {
        match merged.last_mut() {
            Some(last) if (e.mu - last.mu).abs() <= rel_tol * last.mu.abs().max(1.0) => {
                let total = (last.mult + e.mult) as f64;
                last.mu = (last.mu * last.mult as f64 + e.mu * e.mult as f64) / total;
                last.mult += e.mult;
                last.error = last.error.max(e.error);
            }
            _ => merged.push(e),
        }
    }
    let method = if spectra.len() == 1 {
        spectra[0].method
    } else {
        Method::Union
    };
    Spectrum::new(merged, method)
}
