use std::collections::BTreeMap;

use serde::Serialize;

use super::{CsrGraph, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeDirection {
    /// Degrees of the stored lists, from offset differences.
    OutOfOffsets,
    /// Endpoint frequencies, i.e. the degrees of the transposed graph.
    OfEndpoints,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeStats {
    /// degree -> number of vertices with that degree
    pub histogram: BTreeMap<u64, u64>,
    /// threshold -> fraction of vertices with degree strictly below it
    pub fraction_below: BTreeMap<u64, f64>,
    pub max_degree: u64,
}

/// Degree histogram in the requested direction. The 256 threshold (the
/// largest count a one-byte counter holds) is always reported.
pub fn degree_stats<I: VertexId>(g: &CsrGraph<I>, direction: DegreeDirection, thresholds: &[u64]) -> DegreeStats {
    let n = g.num_vertices();
    let degrees: Vec<u64> = match direction {
        DegreeDirection::OutOfOffsets => (0..n).map(|v| g.degree(v)).collect(),
        DegreeDirection::OfEndpoints => {
            let mut d = vec![0u64; n];
            for e in g.edges() {
                d[e.index()] += 1;
            }
            d
        }
    };
    let mut histogram = BTreeMap::new();
    for &d in &degrees {
        *histogram.entry(d).or_insert(0u64) += 1;
    }
    let mut fraction_below = BTreeMap::new();
    for &t in thresholds.iter().chain(std::iter::once(&256)) {
        let below: u64 = histogram.range(..t).map(|(_, c)| c).sum();
        let f = if n == 0 { 0.0 } else { below as f64 / n as f64 };
        fraction_below.insert(t, f);
    }
    DegreeStats {
        max_degree: histogram.keys().next_back().copied().unwrap_or(0),
        histogram,
        fraction_below,
    }
}

/// Mean absolute ID difference between consecutive entries of each neighbor
/// list, over all lists. Returns 0 when no list has two entries. Lower means
/// better locality.
pub fn locality_metric<I: VertexId>(g: &CsrGraph<I>) -> f64 {
    let mut sum = 0u128;
    let mut pairs = 0u64;
    for v in 0..g.num_vertices() {
        for w in g.neighbors(v).windows(2) {
            sum += u128::from(w[0].to_u64().abs_diff(w[1].to_u64()));
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum as f64 / pairs as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_skewed, relabel_random, sample_graph, Orientation};

    #[test]
    fn sample_out_degree() {
        let s = degree_stats(&sample_graph(), DegreeDirection::OutOfOffsets, &[]);
        assert_eq!(s.histogram[&2], 3);
        assert_eq!(s.histogram[&1], 1);
        assert_eq!(sample_graph().degree(0), 2);
    }

    #[test]
    fn regular_graph_all_below_256() {
        let lists: Vec<Vec<u32>> = (0..10u32).map(|v| vec![(v + 1) % 10, (v + 2) % 10, (v + 3) % 10]).collect();
        let g = CsrGraph::from_adjacency(&lists, Orientation::Csr).unwrap();
        let s = degree_stats(&g, DegreeDirection::OfEndpoints, &[]);
        assert_eq!(s.fraction_below[&256], 1.0);
        assert_eq!(s.histogram.values().sum::<u64>(), 10);
    }

    #[test]
    fn endpoint_stats_match_serial_count() {
        let g = generate_skewed(20_000, 200_000, 1.0, 4).unwrap();
        let s = degree_stats(&g, DegreeDirection::OfEndpoints, &[16]);
        let mut freq = vec![0u64; g.num_vertices()];
        for &e in g.edges() {
            freq[e as usize] += 1;
        }
        let below = freq.iter().filter(|&&f| f < 256).count() as f64 / freq.len() as f64;
        assert_eq!(s.fraction_below[&256], below);
        let weighted: u64 = s.histogram.iter().map(|(d, c)| d * c).sum();
        assert_eq!(weighted, g.num_edges() as u64);
        assert_eq!(s.max_degree, *freq.iter().max().unwrap());
    }

    #[test]
    fn locality_of_consecutive_list() {
        let g = CsrGraph::<u32>::from_adjacency(&[vec![5, 6, 7], vec![], vec![], vec![], vec![], vec![], vec![], vec![]], Orientation::Csr).unwrap();
        assert_eq!(locality_metric(&g), 1.0);
        let single = CsrGraph::<u32>::from_adjacency(&[vec![1], vec![0]], Orientation::Csr).unwrap();
        assert_eq!(locality_metric(&single), 0.0);
    }

    #[test]
    fn random_permutation_raises_gap() {
        let n = 10_000usize;
        let lists: Vec<Vec<u32>> = (0..n).map(|v| (1..=4).map(|d| ((v + d) % n) as u32).collect()).collect();
        let g = CsrGraph::from_adjacency(&lists, Orientation::Csr).unwrap();
        let before = locality_metric(&g);
        let after = locality_metric(&relabel_random(&g, 1).0);
        // uniform random IDs have expected gap about n/3
        assert!(before < 3.0);
        assert!(after > n as f64 / 6.0, "{after}");
    }
}
