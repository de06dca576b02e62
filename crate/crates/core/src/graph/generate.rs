//! Generators for the named graphs used throughout the crate and its tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::{Edge, GraphError, MetricGraph};

/// Interval of length `length`: two vertices, one edge.
pub fn make_path(length: f64) -> Result<MetricGraph, GraphError> {
    MetricGraph::new(2, vec![Edge::new(0, 1, length)])
}

/// Star with centre 0 and arm `i` ending at vertex `i + 1`.
pub fn make_star(lengths: &[f64]) -> Result<MetricGraph, GraphError> {
    if lengths.is_empty() {
        return Err(GraphError::BadParameter("star needs at least one arm".into()));
    }
    let edges = lengths
        .iter()
        .enumerate()
        .map(|(i, &l)| Edge::new(0, i + 1, l))
        .collect();
    MetricGraph::new(lengths.len() + 1, edges)
}

pub fn make_equilateral_star(edge_count: usize, total_length: f64) -> Result<MetricGraph, GraphError> {
    if edge_count == 0 {
        return Err(GraphError::BadParameter("edge count must be positive".into()));
    }
    make_star(&vec![total_length / edge_count as f64; edge_count])
}

/// The 3-star with arm lengths `(2k-1)L/(2k+1), L/(2k+1), L/(2k+1)`.
pub fn make_extremal_star(k: usize, total_length: f64) -> Result<MetricGraph, GraphError> {
    if k < 2 {
        return Err(GraphError::BadParameter(format!("k = {k}, need k >= 2")));
    }
    if !(total_length.is_finite() && total_length > 0.0) {
        return Err(GraphError::BadParameter(format!(
            "total length {total_length}"
        )));
    }
    let denom = (2 * k + 1) as f64;
    let long = (2 * k - 1) as f64 * total_length / denom;
    let short = total_length / denom;
    make_star(&[long, short, short])
}

fn check_floor(edge_count: usize, floor: f64) -> Result<(), GraphError> {
    if edge_count == 0 {
        return Err(GraphError::BadParameter("edge count must be positive".into()));
    }
    if !(floor > 0.0 && floor <= 1.0 / edge_count as f64) {
        return Err(GraphError::BadParameter(format!(
            "min length fraction {floor} outside (0, 1/{edge_count}]"
        )));
    }
    Ok(())
}

/// Uniform sample from `{ l : sum l = total, l_i >= floor * total }`: a flat
/// Dirichlet draw on the shrunken simplex, shifted by the floor.
pub fn random_simplex_lengths<R: Rng + ?Sized>(
    rng: &mut R,
    edge_count: usize,
    total: f64,
    floor: f64,
) -> Vec<f64> {
    let draws: Vec<f64> = (0..edge_count).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let sum: f64 = draws.iter().sum();
    let free = 1.0 - floor * edge_count as f64;
    draws
        .iter()
        .map(|d| total * (floor + free * d / sum))
        .collect()
}

/// Decodes a Prüfer sequence over `n = seq.len() + 2` labels into tree edges.
pub(crate) fn prufer_edges(seq: &[usize]) -> Vec<(usize, usize)> {
    let n = seq.len() + 2;
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

fn random_prufer_tree(rng: &mut ChaCha8Rng, edge_count: usize) -> Vec<(usize, usize)> {
    let n = edge_count + 1;
    if n == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    prufer_edges(&seq)
}

fn attach_lengths(
    rng: &mut ChaCha8Rng,
    pairs: &[(usize, usize)],
    floor: f64,
) -> Result<MetricGraph, GraphError> {
    let lengths = random_simplex_lengths(rng, pairs.len(), 1.0, floor);
    let edges = pairs
        .iter()
        .zip(lengths)
        .map(|(&(u, v), l)| Edge::new(u, v, l))
        .collect();
    MetricGraph::new(pairs.len() + 1, edges)
}

/// Random labelled tree (uniform over Prüfer sequences) with unit total
/// length and every edge at least `floor` long. Deterministic per seed.
pub fn make_random_tree(edge_count: usize, seed: u64, floor: f64) -> Result<MetricGraph, GraphError> {
    check_floor(edge_count, floor)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = random_prufer_tree(&mut rng, edge_count);
    attach_lengths(&mut rng, &pairs, floor)
}

/// Like [`make_random_tree`], restricted (by rejection) to trees without
/// vertices of degree two.
pub fn make_random_series_reduced_tree(
    edge_count: usize,
    seed: u64,
    floor: f64,
) -> Result<MetricGraph, GraphError> {
    if edge_count < 3 {
        return Err(GraphError::BadParameter(format!(
            "series-reduced trees need at least 3 edges, got {edge_count}"
        )));
    }
    check_floor(edge_count, floor)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let pairs = random_prufer_tree(&mut rng, edge_count);
        let mut degree = vec![0usize; edge_count + 1];
        for &(u, v) in &pairs {
            degree[u] += 1;
            degree[v] += 1;
        }
        if !degree.contains(&2) {
            return attach_lengths(&mut rng, &pairs, floor);
        }
    }
}

/// Star with `arms` arms, unit total length, lengths drawn like
/// [`make_random_tree`].
pub fn make_random_star(arms: usize, seed: u64, floor: f64) -> Result<MetricGraph, GraphError> {
    check_floor(arms, floor)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    make_star(&random_simplex_lengths(&mut rng, arms, 1.0, floor))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremal_star_lengths() {
        assert_eq!(make_extremal_star(2, 5.0).unwrap().lengths(), vec![3.0, 1.0, 1.0]);
        assert_eq!(make_extremal_star(3, 7.0).unwrap().lengths(), vec![5.0, 1.0, 1.0]);
        assert_eq!(make_extremal_star(2, 1.0).unwrap().lengths(), vec![0.6, 0.2, 0.2]);
        assert!(matches!(
            make_extremal_star(1, 1.0),
            Err(GraphError::BadParameter(_))
        ));
    }

    #[test]
    fn equilateral_star() {
        let g = make_equilateral_star(3, 3.0).unwrap();
        assert_eq!(g.lengths(), vec![1.0; 3]);
        assert_eq!(g.degree(0), 3);
    }

    #[test]
    fn random_tree_is_deterministic() {
        let a = make_random_tree(5, 42, 0.05).unwrap();
        let b = make_random_tree(5, 42, 0.05).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, make_random_tree(5, 43, 0.05).unwrap());
    }

    #[test]
    fn random_tree_respects_floor() {
        for seed in 0..50 {
            let g = make_random_tree(5, seed, 0.05).unwrap();
            let s = g.summary();
            assert!(s.is_tree);
            assert_eq!(s.edge_count, 5);
            assert_eq!(g.vertex_count(), 6);
            assert!(g.min_edge_length() >= 0.05 * s.total_length - 1e-15);
            assert!((s.total_length - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn random_series_reduced_tree_has_no_degree_two() {
        for e in 3..=8 {
            for seed in 0..10 {
                let g = make_random_series_reduced_tree(e, seed, 0.02).unwrap();
                assert!(g.is_tree());
                assert!(!g.has_degree_two_vertex());
            }
        }
    }

    #[test]
    fn floor_validation() {
        assert!(make_random_tree(5, 0, 0.0).is_err());
        assert!(make_random_tree(5, 0, 0.21).is_err());
        assert!(make_random_tree(5, 0, 0.2).is_ok());
        assert!(make_random_tree(0, 0, 0.1).is_err());
    }

    #[test]
    fn prufer_decode_star() {
        // all-equal sequence decodes to a star centred on that label
        let edges = prufer_edges(&[0, 0]);
        assert_eq!(edges.len(), 3);
        assert!(edges.iter().all(|&(a, b)| a == 0 || b == 0));
    }
}
