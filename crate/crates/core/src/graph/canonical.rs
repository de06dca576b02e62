//! AHU-style canonical codes for (metric) trees.
//!
//! The tree is rooted at its combinatorial centre; each vertex is encoded as
//! the sorted concatenation of its children's codes, each child code prefixed
//! by the connecting edge length rounded to [`LENGTH_DIGITS`] decimals when
//! lengths are requested. Bicentral trees take the smaller of the two codes.

use super::MetricGraph;

pub const LENGTH_DIGITS: usize = 12;

/// Canonical code of a tree, `None` for graphs that are not trees.
pub fn tree_canonical_code(g: &MetricGraph, with_lengths: bool) -> Option<String> {
    if !g.is_tree() {
        return None;
    }
    centers(g)
        .into_iter()
        .map(|c| rooted_code(g, c, usize::MAX, with_lengths))
        .min()
}

fn centers(g: &MetricGraph) -> Vec<usize> {
    let n = g.vertex_count();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut degree = g.degrees();
    let mut layer: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        remaining -= layer.len();
        let mut next = Vec::new();
        for &leaf in &layer {
            for &ei in g.incident_edges(leaf) {
                let w = g.edge(ei).other(leaf);
                if degree[w] > 1 {
                    degree[w] -= 1;
                    if degree[w] == 1 {
                        next.push(w);
                    }
                }
            }
            degree[leaf] = 0;
        }
        layer = next;
    }
    layer.sort_unstable();
    layer
}

fn rooted_code(g: &MetricGraph, v: usize, via_edge: usize, with_lengths: bool) -> String {
    let mut children: Vec<String> = g
        .incident_edges(v)
        .iter()
        .filter(|&&ei| ei != via_edge)
        .map(|&ei| {
            let e = g.edge(ei);
            let sub = rooted_code(g, e.other(v), ei, with_lengths);
            if with_lengths {
                format!("{:.*}{}", LENGTH_DIGITS, e.length, sub)
            } else {
                sub
            }
        })
        .collect();
    children.sort_unstable();
    let mut code = String::from("(");
    for c in children {
        code.push_str(&c);
    }
    code.push(')');
    code
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, make_star, Edge};

    #[test]
    fn star_code_ignores_arm_order() {
        let a = make_star(&[3.0, 1.0, 2.0]).unwrap();
        let b = make_star(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(tree_canonical_code(&a, true), tree_canonical_code(&b, true));
        assert_eq!(tree_canonical_code(&a, false).unwrap(), "(()()())");
    }

    #[test]
    fn relabelled_double_star_matches() {
        // centres 0-1, leaves 2,3 on 0 and 4,5 on 1
        let a = build_graph(
            6,
            vec![
                Edge::new(0, 1, 1.0),
                Edge::new(0, 2, 0.5),
                Edge::new(0, 3, 0.25),
                Edge::new(1, 4, 0.75),
                Edge::new(1, 5, 2.0),
            ],
        )
        .unwrap();
        let b = build_graph(
            6,
            vec![
                Edge::new(5, 3, 2.0),
                Edge::new(3, 4, 1.0),
                Edge::new(4, 0, 0.25),
                Edge::new(3, 1, 0.75),
                Edge::new(2, 4, 0.5),
            ],
        )
        .unwrap();
        assert_eq!(tree_canonical_code(&a, true), tree_canonical_code(&b, true));
        let c = a.with_lengths(&[1.0, 0.5, 0.75, 0.25, 2.0]).unwrap();
        assert_ne!(tree_canonical_code(&a, true), tree_canonical_code(&c, true));
        assert_eq!(tree_canonical_code(&a, false), tree_canonical_code(&c, false));
    }

    #[test]
    fn non_tree_has_no_code() {
        let g = build_graph(2, vec![Edge::new(0, 1, 1.0), Edge::new(0, 1, 2.0)]).unwrap();
        assert_eq!(tree_canonical_code(&g, false), None);
    }
}
