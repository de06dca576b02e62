use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mgspec_core::fem::compute_spectrum_fem;
use mgspec_core::graph::{
    make_equilateral_star, make_extremal_star, make_path, make_random_series_reduced_tree, make_random_tree,
    make_star,
};
use mgspec_core::isoperimetric::{check_bound_secular, BoundReport};
use mgspec_core::optimizer::global_search;
use mgspec_core::surgery::{detach_edge, extract_three_star, remove_pendant, shorten_pendant, shorten_to_equilateral};
use mgspec_core::{compute_spectrum_any, MetricGraph, SecularOptions, Spectrum};

use crate::output::{self, sig10, Format};
use crate::{
    BoundArgs, Failure, GenerateCommand, MethodArg, OptimizeArgs, SpectrumArgs, SurgeryCommand, SurgeryOutput,
    EXIT_CONVERGENCE, EXIT_DISAGREEMENT, EXIT_INPUT,
};

fn read_graph(path: &Path) -> Result<MetricGraph, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))?;
    MetricGraph::from_json(&text).map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::new(EXIT_INPUT, format!("cannot write {}: {e}", path.display())))
}

/// One distinct eigenvalue; the `fem` columns are filled by `--method both`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    /// 1-based index of the first copy
    pub index: usize,
    pub mu: f64,
    pub mult: usize,
    pub error: f64,
    pub mu_fem: Option<f64>,
    pub mult_fem: Option<usize>,
    /// largest relative distance between `mu` and its finite-element copies
    pub discrepancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub method: String,
    pub count: usize,
    pub rows: Vec<SpectrumRow>,
    pub counts_agree: Option<bool>,
}

fn rows_of(s: &Spectrum, count: usize) -> Vec<SpectrumRow> {
    let mut index = 1;
    let mut rows = Vec::new();
    for e in s.entries() {
        if index > count {
            break;
        }
        rows.push(SpectrumRow {
            index,
            mu: e.mu,
            mult: e.mult,
            error: e.error,
            mu_fem: None,
            mult_fem: None,
            discrepancy: None,
        });
        index += e.mult;
    }
    rows
}

fn fem_mesh(g: &MetricGraph, count: usize) -> f64 {
    (g.min_edge_length() / 2.0).min(g.total_length() / (20.0 * count as f64))
}

/// Attaches finite-element values to secular rows and checks that every
/// window around a secular eigenvalue holds as many finite-element
/// eigenvalues as its multiplicity.
fn compare(rows: &mut [SpectrumRow], secular: &Spectrum, fem: &Spectrum) -> bool {
    let entries = secular.entries();
    let mut agree = true;
    for (i, row) in rows.iter_mut().enumerate() {
        let lo = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (entries[i - 1].mu + entries[i].mu) };
        let hi = match entries.get(i + 1) {
            Some(next) => 0.5 * (entries[i].mu + next.mu),
            None => f64::INFINITY,
        };
        let copies: Vec<f64> = fem.flattened().into_iter().filter(|&m| lo < m && m < hi).collect();
        let scale = row.mu.abs().max(1.0);
        row.mult_fem = Some(copies.len());
        row.mu_fem = (!copies.is_empty()).then(|| copies.iter().sum::<f64>() / copies.len() as f64);
        row.discrepancy = Some(copies.iter().map(|m| (m - row.mu).abs() / scale).fold(0.0, f64::max));
        if copies.len() != row.mult && hi.is_finite() {
            agree = false;
        }
    }
    agree
}

pub fn spectrum(a: &SpectrumArgs) -> Result<String, Failure> {
    let g = read_graph(&a.graph)?;
    let count = a.count as usize;
    let opts = SecularOptions {
        refine_tol: a.tol,
        ..SecularOptions::default()
    };
    let report = match a.method {
        MethodArg::Secular => SpectrumReport {
            method: "secular".into(),
            count,
            rows: rows_of(&compute_spectrum_any(&g, count, &opts)?, count),
            counts_agree: None,
        },
        MethodArg::Fem => SpectrumReport {
            method: "fem".into(),
            count,
            rows: rows_of(&compute_spectrum_fem(&g, count, fem_mesh(&g, count), 3)?, count),
            counts_agree: None,
        },
        MethodArg::Both => {
            // one extra secular eigenvalue closes the window of the last row
            let secular = compute_spectrum_any(&g, count + 1, &opts)?;
            let fem = compute_spectrum_fem(&g, count + 4, fem_mesh(&g, count + 4), 3)?;
            let mut rows = rows_of(&secular, count);
            let agree = compare(&mut rows, &secular, &fem);
            SpectrumReport {
                method: "both".into(),
                count,
                rows,
                counts_agree: Some(agree),
            }
        }
    };
    let text = match a.format {
        Format::Json => output::json(&report),
        Format::Csv => output::csv(&report.rows),
        Format::Table => {
            let both = a.method == MethodArg::Both;
            let mut header = vec!["j", "mu", "mult", "error"];
            if both {
                header.extend(["mu_fem", "mult_fem", "discrepancy"]);
            }
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    let mut c = vec![r.index.to_string(), sig10(r.mu), r.mult.to_string(), sig10(r.error)];
                    if both {
                        c.push(output::opt(r.mu_fem));
                        c.push(r.mult_fem.map(|m| m.to_string()).unwrap_or_default());
                        c.push(output::opt(r.discrepancy));
                    }
                    c
                })
                .collect();
            output::table(&header, &rows)
        }
    };
    if report.counts_agree == Some(false) {
        let mut f = Failure::new(EXIT_DISAGREEMENT, "secular and finite-element eigenvalue counts disagree");
        f.output = text;
        return Err(f);
    }
    Ok(text)
}

pub fn bound(a: &BoundArgs) -> Result<String, Failure> {
    let g = read_graph(&a.graph)?;
    let r = check_bound_secular(&g, a.k as usize, &SecularOptions::default())?;
    Ok(match a.format {
        Format::Json => output::json(&r),
        Format::Csv => format!("{}\n{}\n", BoundReport::CSV_HEADER, r.to_csv_row()),
        Format::Table => {
            let rows = vec![
                vec!["k".into(), r.k.to_string()],
                vec!["mu_value".into(), sig10(r.mu_value)],
                vec!["a_squared".into(), sig10(r.a_squared)],
                vec!["product".into(), sig10(r.product)],
                vec!["bound".into(), sig10(r.bound)],
                vec!["gap".into(), sig10(r.gap)],
                vec!["is_equality".into(), r.is_equality.to_string()],
            ];
            output::table(&["field", "value"], &rows)
        }
    })
}

pub fn optimize(a: &OptimizeArgs) -> Result<String, Failure> {
    let (lo, hi) = a.edges;
    let s = global_search(lo, hi, a.k as usize, a.restarts as usize, a.seed)?;
    if let Some(path) = &a.out {
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        write_file(path, &if is_csv { s.to_csv() } else { s.to_json() + "\n" })?;
    }
    let text = match a.format {
        Format::Json => s.to_json() + "\n",
        Format::Csv => s.to_csv(),
        Format::Table => {
            let rows: Vec<Vec<String>> = s
                .results
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let lengths = r.sorted_lengths().iter().map(|&l| sig10(l)).collect::<Vec<_>>().join(" ");
                    let mark = if i == s.winner {
                        "*"
                    } else if s.ties.contains(&i) {
                        "="
                    } else {
                        ""
                    };
                    vec![
                        mark.to_string(),
                        r.topology.edge_count().to_string(),
                        r.topology.code.clone(),
                        lengths,
                        sig10(r.best_product),
                        sig10(r.gap),
                        r.converged.to_string(),
                    ]
                })
                .collect();
            let mut t = output::table(&["", "E", "code", "lengths", "product", "gap", "converged"], &rows);
            t += &format!("bound {}\n", sig10(s.winner().bound));
            if let Some(m) = s.matches_prediction {
                t += &format!("winner matches predicted 3-star: {m}\n");
            }
            t
        }
    };
    if !s.winner().converged {
        let mut f = Failure::new(EXIT_CONVERGENCE, "optimizer did not converge on the winning topology");
        f.output = text;
        return Err(f);
    }
    Ok(text)
}

/// Eigenvalues before and after a surgery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryRow {
    pub index: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SurgeryReport<'a> {
    operation: &'a str,
    rows: Vec<SurgeryRow>,
    /// shortest arm over average arm, for `equilateral`
    alpha: Option<f64>,
    extraction: Option<serde_json::Value>,
    graph: MetricGraph,
}

pub fn surgery(c: &SurgeryCommand) -> Result<String, Failure> {
    let (operation, path, out) = match c {
        SurgeryCommand::RemovePendant { graph, output, .. } => ("remove-pendant", graph, output),
        SurgeryCommand::ShortenPendant { graph, output, .. } => ("shorten-pendant", graph, output),
        SurgeryCommand::Detach { graph, output, .. } => ("detach", graph, output),
        SurgeryCommand::Equilateral { graph, output } => ("equilateral", graph, output),
        SurgeryCommand::Extract { graph, output } => ("extract", graph, output),
    };
    let g = read_graph(path)?;
    let mut alpha = None;
    let mut extraction = None;
    let after = match c {
        SurgeryCommand::RemovePendant { edge, .. } => remove_pendant(&g, *edge)?,
        SurgeryCommand::ShortenPendant { edge, delta, .. } => shorten_pendant(&g, *edge, *delta)?,
        SurgeryCommand::Detach { edge, .. } => detach_edge(&g, *edge)?,
        SurgeryCommand::Equilateral { .. } => {
            let (s, a) = shorten_to_equilateral(&g)?;
            alpha = Some(a);
            s
        }
        SurgeryCommand::Extract { .. } => {
            let x = extract_three_star(&g)?;
            extraction = Some(serde_json::to_value(&x).expect("extraction serializes"));
            x.star
        }
    };
    surgery_report(operation, &g, after, alpha, extraction, out)
}

fn surgery_report(
    operation: &str,
    before: &MetricGraph,
    after: MetricGraph,
    alpha: Option<f64>,
    extraction: Option<serde_json::Value>,
    out: &SurgeryOutput,
) -> Result<String, Failure> {
    let count = out.count as usize;
    let opts = SecularOptions::default();
    let mu_before = compute_spectrum_any(before, count, &opts)?.flattened();
    let mu_after = compute_spectrum_any(&after, count, &opts)?.flattened();
    let rows: Vec<SurgeryRow> = mu_before
        .iter()
        .zip(&mu_after)
        .enumerate()
        .take(count)
        .map(|(i, (&b, &a))| SurgeryRow {
            index: i + 1,
            before: b,
            after: a,
        })
        .collect();
    if let Some(path) = &out.out {
        write_file(path, &(after.to_json() + "\n"))?;
    }
    Ok(match out.format {
        Format::Json => output::json(&SurgeryReport {
            operation,
            rows,
            alpha,
            extraction,
            graph: after,
        }),
        Format::Csv => output::csv(&rows),
        Format::Table => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.index.to_string(), sig10(r.before), sig10(r.after)])
                .collect();
            let mut t = format!("{operation}\n");
            t += &output::table(&["j", "before", "after"], &cells);
            if let Some(a) = alpha {
                t += &format!("alpha {}\n", sig10(a));
            }
            t
        }
    })
}

pub fn generate(c: &GenerateCommand) -> Result<String, Failure> {
    let (g, out) = match c {
        GenerateCommand::ExtremalStar { k, length, out } => (make_extremal_star(*k as usize, *length)?, out),
        GenerateCommand::EquilateralStar { edges, length, out } => {
            (make_equilateral_star(*edges as usize, *length)?, out)
        }
        GenerateCommand::Star { lengths, out } => (make_star(lengths)?, out),
        GenerateCommand::Path { length, out } => (make_path(*length)?, out),
        GenerateCommand::RandomTree {
            edges,
            seed,
            series_reduced,
            floor,
            out,
        } => {
            let g = if *series_reduced {
                make_random_series_reduced_tree(*edges as usize, *seed, *floor)?
            } else {
                make_random_tree(*edges as usize, *seed, *floor)?
            };
            (g, out)
        }
    };
    let text = g.to_json() + "\n";
    match out {
        Some(path) => {
            write_file(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_cover_requested_count() {
        let g = make_extremal_star(2, 1.0).unwrap();
        let s = compute_spectrum_any(&g, 5, &SecularOptions::default()).unwrap();
        let rows = rows_of(&s, 5);
        assert_eq!(rows.iter().map(|r| r.mult).sum::<usize>(), 5);
        assert_eq!(rows[2].index, 3);
        assert_eq!(rows[2].mult, 2);
        assert_eq!(rows.last().unwrap().index, 5);
    }

    #[test]
    fn window_comparison_flags_missing_copies() {
        let g = make_extremal_star(2, 1.0).unwrap();
        let s = compute_spectrum_any(&g, 6, &SecularOptions::default()).unwrap();
        let mut rows = rows_of(&s, 5);
        assert!(compare(&mut rows, &s, &s.clone()));
        let fewer = s.truncated(3);
        let mut rows = rows_of(&s, 5);
        assert!(!compare(&mut rows, &s, &fewer));
    }
}
