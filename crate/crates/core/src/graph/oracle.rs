//! Serial reference transposition and canonical forms used for checking.

use super::{compress_sorted_pairs, CsrGraph, VertexId};

/// Multiset of `(owner, endpoint)` pairs, kept as a sorted vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMultiset {
    pub pairs: Vec<(u64, u64)>,
}

impl EdgeMultiset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The same multiset with every pair reversed.
    pub fn swapped(&self) -> Self {
        let mut pairs: Vec<_> = self.pairs.iter().map(|&(a, b)| (b, a)).collect();
        pairs.sort_unstable();
        Self { pairs }
    }

    /// Multiplicity of one pair.
    pub fn count(&self, pair: (u64, u64)) -> usize {
        let lo = self.pairs.partition_point(|p| *p < pair);
        let hi = self.pairs.partition_point(|p| *p <= pair);
        hi - lo
    }
}

pub fn edge_multiset<I: VertexId>(g: &CsrGraph<I>) -> EdgeMultiset {
    let mut pairs = Vec::with_capacity(g.num_edges());
    for v in 0..g.num_vertices() {
        pairs.extend(g.neighbors(v).iter().map(|u| (v as u64, u.to_u64())));
    }
    pairs.sort_unstable();
    EdgeMultiset { pairs }
}

/// Serial reference transposition: expands every edge to an
/// `(endpoint, owner)` pair, sorts the pairs, and recompresses. Neighbor lists
/// of the result are ascending.
pub fn transpose_oracle<I: VertexId>(g: &CsrGraph<I>) -> CsrGraph<I> {
    let mut pairs: Vec<(I, I)> = Vec::with_capacity(g.num_edges());
    for v in 0..g.num_vertices() {
        let owner = I::from_index(v);
        pairs.extend(g.neighbors(v).iter().map(|&u| (u, owner)));
    }
    pairs.sort_unstable();
    compress_sorted_pairs(g.num_vertices(), pairs.into_iter(), g.orientation().flipped())
}

/// Copy of `g` with every neighbor list sorted ascending.
pub fn sorted_lists<I: VertexId>(g: &CsrGraph<I>) -> CsrGraph<I> {
    let mut out = g.clone();
    let offsets = out.offsets().to_vec();
    let edges = out.edges_mut();
    for w in offsets.windows(2) {
        edges[w[0] as usize..w[1] as usize].sort_unstable();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_graph, Orientation};
    use proptest::prelude::*;

    #[test]
    fn sample_graph_transpose() {
        let t = transpose_oracle(&sample_graph());
        assert_eq!(t.orientation(), Orientation::Csc);
        assert_eq!(&t.offsets()[..2], &[0, 1]);
        assert_eq!(t.edges()[0], 3);
        assert_eq!(t.offsets(), &[0, 1, 2, 5, 7]);
        assert_eq!(t.edges(), &[3, 0, 0, 1, 3, 1, 2]);
    }

    #[test]
    fn self_loop_is_fixed_point() {
        let g = CsrGraph::<u32>::from_parts(vec![0, 1], vec![0], Orientation::Csr).unwrap();
        let t = transpose_oracle(&g);
        assert_eq!(t.offsets(), g.offsets());
        assert_eq!(t.edges(), g.edges());
    }

    #[test]
    fn multiset_pairs() {
        let m = edge_multiset(&sample_graph());
        assert_eq!(m.count((0, 1)), 1);
        assert_eq!(m.count((0, 2)), 1);
        let empty = edge_multiset(&CsrGraph::<u32>::empty(Orientation::Csr));
        assert!(empty.is_empty());
        let dup = CsrGraph::<u32>::from_parts(vec![0, 2, 2], vec![1, 1], Orientation::Csr).unwrap();
        assert_eq!(edge_multiset(&dup).count((0, 1)), 2);
    }

    fn arb_graph() -> impl Strategy<Value = CsrGraph<u32>> {
        (1usize..60).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::vec(0..n as u32, 0..12), n)
                .prop_map(|lists| CsrGraph::from_adjacency(&lists, Orientation::Csr).unwrap())
        })
    }

    proptest! {
        #[test]
        fn involution(g in arb_graph()) {
            let tt = transpose_oracle(&transpose_oracle(&g));
            prop_assert_eq!(tt.offsets(), g.offsets());
            let sorted = sorted_lists(&g);
            prop_assert_eq!(tt.edges(), sorted.edges());
        }

        #[test]
        fn multiset_swaps(g in arb_graph()) {
            prop_assert_eq!(edge_multiset(&transpose_oracle(&g)), edge_multiset(&g).swapped());
        }
    }
}
