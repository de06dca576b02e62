//! Graph surgery: removing, shortening and detaching edges, and cutting a
//! 3-star out of a tree.
//!
//! All operations are pure and return a new graph. Their effect on the
//! spectrum (pendant removal never lowers `mu_{k+1}`, detaching is a rank-one
//! change, and so on) is checked by the tests, not enforced here.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{make_star, Edge, GraphError, MetricGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurgeryError {
    #[error("edge {0} has no endpoint of degree one")]
    NotPendant(usize),
    #[error("removing edge {0} would leave an empty graph")]
    WouldBeEmpty(usize),
    #[error("cannot shorten an edge of length {length} by {delta}")]
    DeltaOutOfRange { delta: f64, length: f64 },
    #[error("graph is not a star with three edges")]
    NotAThreeStar,
    #[error("graph is not a tree")]
    NotATree,
    #[error("need at least three edges, got {0}")]
    TooFewEdges(usize),
    #[error("vertex {0} has degree two")]
    DegreeTwoVertex(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The degree-one endpoint of a pendant edge (the `v` end if both qualify).
fn leaf_end(g: &MetricGraph, edge: usize) -> Option<usize> {
    let e = g.edge(edge);
    if g.degree(e.v) == 1 {
        Some(e.v)
    } else if g.degree(e.u) == 1 {
        Some(e.u)
    } else {
        None
    }
}

/// Deletes a pendant edge together with its degree-one endpoint. Vertices
/// above the removed one shift down by one; edges keep their relative order.
pub fn remove_pendant(g: &MetricGraph, edge: usize) -> Result<MetricGraph, SurgeryError> {
    g.check_edge(edge)?;
    let leaf = leaf_end(g, edge).ok_or(SurgeryError::NotPendant(edge))?;
    if g.edge_count() == 1 {
        return Err(SurgeryError::WouldBeEmpty(edge));
    }
    let relabel = |w: usize| if w > leaf { w - 1 } else { w };
    let edges = g
        .edges()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != edge)
        .map(|(_, e)| Edge::new(relabel(e.u), relabel(e.v), e.length))
        .collect();
    Ok(MetricGraph::new(g.vertex_count() - 1, edges)?)
}

/// Cuts `delta` off the loose end of a pendant edge.
pub fn shorten_pendant(g: &MetricGraph, edge: usize, delta: f64) -> Result<MetricGraph, SurgeryError> {
    g.check_edge(edge)?;
    if leaf_end(g, edge).is_none() {
        return Err(SurgeryError::NotPendant(edge));
    }
    let length = g.edge(edge).length;
    if !(delta > 0.0 && delta < length) {
        return Err(SurgeryError::DeltaOutOfRange { delta, length });
    }
    let mut lengths = g.lengths();
    lengths[edge] = length - delta;
    Ok(g.with_lengths(&lengths)?)
}

/// Centre of a 3-star, if `g` is one.
pub fn three_star_centre(g: &MetricGraph) -> Option<usize> {
    if g.edge_count() != 3 || !g.is_tree() {
        return None;
    }
    (0..g.vertex_count()).find(|&v| g.degree(v) == 3)
}

/// Shortens every arm of a 3-star to the shortest one. Returns the
/// equilateral star and `alpha = L(star) / L(g)`.
pub fn shorten_to_equilateral(g: &MetricGraph) -> Result<(MetricGraph, f64), SurgeryError> {
    three_star_centre(g).ok_or(SurgeryError::NotAThreeStar)?;
    let shortest = g.min_edge_length();
    let star = g.with_lengths(&[shortest; 3])?;
    let alpha = 3.0 * shortest / g.total_length();
    Ok((star, alpha))
}

/// Severs `edge` from its higher-degree endpoint (lower index on a tie),
/// which gets a fresh degree-one vertex appended at the end. An edge whose
/// endpoints both have degree one is returned unchanged.
pub fn detach_edge(g: &MetricGraph, edge: usize) -> Result<MetricGraph, SurgeryError> {
    g.check_edge(edge)?;
    let e = *g.edge(edge);
    let (du, dv) = (g.degree(e.u), g.degree(e.v));
    if du == 1 && dv == 1 {
        return Ok(g.clone());
    }
    let cut = if dv > du || (dv == du && e.v < e.u) { e.v } else { e.u };
    let fresh = g.vertex_count();
    let mut edges = g.edges().to_vec();
    edges[edge] = if cut == e.u {
        Edge::new(fresh, e.v, e.length)
    } else {
        Edge::new(e.u, fresh, e.length)
    };
    Ok(MetricGraph::new(fresh + 1, edges)?)
}

/// What [`extract_three_star`] built and why.
#[derive(Debug, Clone, Serialize)]
pub struct Extraction {
    pub star: MetricGraph,
    /// the three longest edges, longest first (ties by index)
    pub longest: [usize; 3],
    /// longest edge off the first path
    pub third_edge: usize,
    /// leaf-to-leaf path through the two longest edges
    pub first_path: Vec<usize>,
    /// path from a leaf through `third_edge` to the first path
    pub second_path: Vec<usize>,
    pub star_length: f64,
    /// `L(star) / 3`
    pub star_average: f64,
    /// `L(g) / E(g)`
    pub graph_average: f64,
    /// `L(star) * E(g) >= 3 L(g)` in exact rational arithmetic on the
    /// stored edge lengths
    pub average_bound_exact: bool,
}

fn path_length(g: &MetricGraph, path: &[usize]) -> f64 {
    path.iter().map(|&i| g.edge(i).length).sum()
}

/// Longest candidate first, then the lexicographically smallest edge sequence.
fn better(g: &MetricGraph, cand: &[usize], best: &Option<Vec<usize>>) -> bool {
    match best {
        None => true,
        Some(b) => {
            let (lc, lb) = (path_length(g, cand), path_length(g, b));
            lc > lb || (lc == lb && cand < b.as_slice())
        }
    }
}

fn canonical_orientation(mut p: Vec<usize>) -> Vec<usize> {
    let mut r = p.clone();
    r.reverse();
    if r < p {
        p = r;
    }
    p
}

fn exact_sum(lengths: impl Iterator<Item = f64>) -> BigRational {
    lengths.fold(BigRational::from_integer(BigInt::from(0)), |acc, l| {
        acc + BigRational::from_float(l).expect("finite edge length")
    })
}

/// Cuts a 3-star out of a series-reduced tree that keeps the three longest
/// edges, so its average edge length is at least that of the tree.
///
/// The first path joins two leaves through the two longest edges (longest
/// such path, then lexicographically smallest edge sequence). The third edge
/// is the third longest edge if it is off that path, otherwise the longest
/// edge off it. The second path runs from a leaf through the third edge to
/// the first path without sharing an edge with it (same tie-breaks). The
/// union, with its degree-two vertices suppressed, is the star.
pub fn extract_three_star(g: &MetricGraph) -> Result<Extraction, SurgeryError> {
    if !g.is_tree() {
        return Err(SurgeryError::NotATree);
    }
    if g.edge_count() < 3 {
        return Err(SurgeryError::TooFewEdges(g.edge_count()));
    }
    if let Some(v) = (0..g.vertex_count()).find(|&v| g.degree(v) == 2) {
        return Err(SurgeryError::DegreeTwoVertex(v));
    }
    let mut order: Vec<usize> = (0..g.edge_count()).collect();
    order.sort_by(|&a, &b| g.edge(b).length.total_cmp(&g.edge(a).length).then(a.cmp(&b)));
    let longest = [order[0], order[1], order[2]];

    let leaves: Vec<usize> = (0..g.vertex_count()).filter(|&v| g.degree(v) == 1).collect();
    let mut first: Option<Vec<usize>> = None;
    for (i, &a) in leaves.iter().enumerate() {
        for &b in &leaves[i + 1..] {
            let p = g.tree_path(a, b).expect("tree is connected");
            if !(p.contains(&longest[0]) && p.contains(&longest[1])) {
                continue;
            }
            let p = canonical_orientation(p);
            if better(g, &p, &first) {
                first = Some(p);
            }
        }
    }
    let first = first.expect("any two edges of a tree lie on a leaf-to-leaf path");

    let on_first_vertex = {
        let mut on = vec![false; g.vertex_count()];
        for &i in &first {
            on[g.edge(i).u] = true;
            on[g.edge(i).v] = true;
        }
        on
    };
    let third_edge = if !first.contains(&longest[2]) {
        longest[2]
    } else {
        *order
            .iter()
            .find(|i| !first.contains(i))
            .expect("a series-reduced tree is not a path")
    };

    // from each leaf off the first path, walk to the first path
    let anchor = g.edge(first[0]).u;
    let mut second: Option<Vec<usize>> = None;
    for &x in leaves.iter().filter(|&&x| !on_first_vertex[x]) {
        let full = g.tree_path(x, anchor).expect("tree is connected");
        let mut p = Vec::new();
        let mut at = x;
        for i in full {
            p.push(i);
            at = g.edge(i).other(at);
            if on_first_vertex[at] {
                break;
            }
        }
        if p.contains(&third_edge) && better(g, &p, &second) {
            second = Some(p);
        }
    }
    let second = second.expect("the third edge extends to a leaf away from the first path");

    // split the first path at the junction into the other two arms
    let junction = {
        let last = g.edge(*second.last().unwrap());
        if on_first_vertex[last.u] {
            last.u
        } else {
            last.v
        }
    };
    let start = {
        let e0 = g.edge(first[0]);
        if first.len() == 1 {
            e0.u
        } else {
            let e1 = g.edge(first[1]);
            if e1.is_incident(e0.u) {
                e0.v
            } else {
                e0.u
            }
        }
    };
    let mut at = start;
    let mut arm_a = 0.0;
    let mut split = first.len();
    for (j, &i) in first.iter().enumerate() {
        if at == junction {
            split = j;
            break;
        }
        arm_a += g.edge(i).length;
        at = g.edge(i).other(at);
    }
    let arm_b = path_length(g, &first[split..]);
    let arm_c = path_length(g, &second);
    let star = make_star(&[arm_a, arm_b, arm_c])?;

    let star_exact = exact_sum(first.iter().chain(&second).map(|&i| g.edge(i).length));
    let graph_exact = exact_sum(g.edges().iter().map(|e| e.length));
    let e = BigRational::from_integer(BigInt::from(g.edge_count()));
    let three = BigRational::from_integer(BigInt::from(3));
    let average_bound_exact = star_exact * e >= graph_exact * three;

    let star_length = path_length(g, &first) + arm_c;
    Ok(Extraction {
        star,
        longest,
        third_edge,
        first_path: first,
        second_path: second,
        star_length,
        star_average: star_length / 3.0,
        graph_average: g.total_length() / g.edge_count() as f64,
        average_bound_exact,
    })
}
