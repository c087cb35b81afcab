//! Vertex relabeling.

use super::{CsrGraph, VertexId};
use crate::memlat::Xoshiro256StarStar;

/// Applies `perm` (old ID -> new ID) to owners and endpoints. Neighbor lists
/// keep their original order, so relabeling with the inverse permutation
/// restores the input exactly.
///
/// Panics if `perm.len() != g.num_vertices()`.
pub fn relabel<I: VertexId>(g: &CsrGraph<I>, perm: &[I]) -> CsrGraph<I> {
    let n = g.num_vertices();
    assert_eq!(perm.len(), n, "permutation length must equal |V|");
    let mut offsets = vec![0u64; n + 1];
    for v in 0..n {
        offsets[perm[v].index() + 1] = g.degree(v);
    }
    for v in 0..n {
        offsets[v + 1] += offsets[v];
    }
    let mut edges = vec![I::default(); g.num_edges()];
    for v in 0..n {
        let start = offsets[perm[v].index()] as usize;
        for (slot, u) in edges[start..].iter_mut().zip(g.neighbors(v)) {
            *slot = perm[u.index()];
        }
    }
    CsrGraph::from_parts_unchecked(offsets, edges, g.orientation())
}

/// Relabels `g` with a seeded uniform permutation; returns the new graph and
/// the mapping old ID -> new ID.
pub fn relabel_random<I: VertexId>(g: &CsrGraph<I>, seed: u64) -> (CsrGraph<I>, Vec<I>) {
    let n = g.num_vertices();
    let mut perm: Vec<I> = (0..n).map(I::from_index).collect();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    (relabel(g, &perm), perm)
}

pub fn inverse_permutation<I: VertexId>(perm: &[I]) -> Vec<I> {
    let mut inv = vec![I::default(); perm.len()];
    for (old, new) in perm.iter().enumerate() {
        inv[new.index()] = I::from_index(old);
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{edge_multiset, locality_metric, sample_graph, CsrGraph, Orientation};

    fn degree_multiset(g: &CsrGraph<u32>) -> Vec<u64> {
        let mut d: Vec<u64> = (0..g.num_vertices()).map(|v| g.degree(v)).collect();
        d.sort_unstable();
        d
    }

    #[test]
    fn inverse_restores_original() {
        let g = crate::graph::generate_skewed(500, 4000, 1.1, 5).unwrap();
        let (r, perm) = relabel_random(&g, 77);
        let back = relabel(&r, &inverse_permutation(&perm));
        assert_eq!(back, g);
    }

    #[test]
    fn preserves_degrees_and_maps_edges() {
        let g = sample_graph();
        for seed in 0..10 {
            let (r, perm) = relabel_random(&g, seed);
            assert_eq!(degree_multiset(&r), degree_multiset(&g));
            let mut expected: Vec<(u64, u64)> = edge_multiset(&g)
                .pairs
                .iter()
                .map(|&(u, v)| (u64::from(perm[u as usize]), u64::from(perm[v as usize])))
                .collect();
            expected.sort_unstable();
            assert_eq!(edge_multiset(&r).pairs, expected);
        }
    }

    #[test]
    fn randomizing_an_optimized_graph_hurts_locality() {
        // banded graph: every vertex links to its next five IDs
        let n = 100_000usize;
        let lists: Vec<Vec<u32>> = (0..n).map(|v| (1..=5).map(|d| ((v + d) % n) as u32).collect()).collect();
        let g = CsrGraph::from_adjacency(&lists, Orientation::Csr).unwrap();
        let base = locality_metric(&g);
        let worse = (0..20).filter(|&s| locality_metric(&relabel_random(&g, s).0) > base).count();
        assert!(worse >= 19, "{worse}/20");
    }
}
