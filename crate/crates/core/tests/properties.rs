mod common;

use potra::graph::{relabel_random, sorted_lists, transpose_oracle};
use potra::model::HdvBudget;
use potra::{
    sort_neighbor_lists, transpose_atomic, transpose_mergetrans, transpose_potra, transpose_scantrans, CsrGraph, Method,
    Orientation, PotraOptions, TransposeOutput, VertexId,
};
use proptest::prelude::*;

fn lists_strategy() -> impl Strategy<Value = Vec<Vec<u32>>> {
    (1usize..200).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(0..n as u32, 0..12), n))
}

fn all_transposes<I: VertexId>(g: &CsrGraph<I>, threads: usize, seed: u64) -> Vec<(&'static str, TransposeOutput<I>)> {
    let budget = HdvBudget::new(512, threads);
    let hlh = PotraOptions { seed, partition_edges: 5, sample_fraction: 0.5, ..PotraOptions::forced(Method::Hlh) };
    let auto = PotraOptions { seed, ..PotraOptions::default() };
    vec![
        ("atomic", transpose_atomic(g, threads).unwrap()),
        ("scantrans", transpose_scantrans(g, threads, Some(u64::MAX)).unwrap()),
        ("mergetrans", transpose_mergetrans(g, threads, 1 + seed as usize % 50).unwrap()),
        ("potra-hlh", transpose_potra(g, threads, &budget, &hlh).unwrap()),
        ("potra-auto", transpose_potra(g, threads, &budget, &auto).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_algorithm_matches_oracle(lists in lists_strategy(), threads in 1usize..6, seed: u64, csc: bool) {
        let o = if csc { Orientation::Csc } else { Orientation::Csr };
        let g = CsrGraph::from_adjacency(&lists, o).unwrap();
        let want = transpose_oracle(&g);
        for (name, out) in all_transposes(&g, threads, seed) {
            prop_assert_eq!(out.graph.orientation(), o.flipped(), "{}", name);
            let got = sort_neighbor_lists(out, threads).graph;
            prop_assert!(got == want, "{} differs from oracle", name);
        }
    }

    #[test]
    fn degrees_are_conserved(lists in lists_strategy(), threads in 1usize..6, seed: u64) {
        let g = CsrGraph::from_adjacency(&lists, Orientation::Csr).unwrap();
        let expected = common::endpoint_degrees(&g);
        for (name, out) in all_transposes(&g, threads, seed) {
            let t = &out.graph;
            prop_assert_eq!(t.num_vertices(), g.num_vertices());
            prop_assert_eq!(t.num_edges(), g.num_edges());
            prop_assert_eq!(*t.offsets().last().unwrap(), g.num_edges() as u64);
            for (v, &d) in expected.iter().enumerate() {
                prop_assert_eq!(t.degree(v), d, "{} vertex {}", name, v);
            }
        }
    }

    #[test]
    fn wide_ids_match_narrow(lists in lists_strategy(), threads in 1usize..4, seed: u64) {
        let narrow = CsrGraph::from_adjacency(&lists, Orientation::Csr).unwrap();
        let wide_lists: Vec<Vec<u64>> = lists.iter().map(|l| l.iter().map(|&v| u64::from(v)).collect()).collect();
        let wide = CsrGraph::from_adjacency(&wide_lists, Orientation::Csr).unwrap();
        let a = all_transposes(&narrow, threads, seed);
        let b = all_transposes(&wide, threads, seed);
        for ((name, x), (_, y)) in a.into_iter().zip(b) {
            let x = sort_neighbor_lists(x, threads).graph;
            let y = sort_neighbor_lists(y, threads).graph;
            prop_assert_eq!(x.offsets(), y.offsets(), "{}", name);
            prop_assert!(x.edges().iter().zip(y.edges()).all(|(&p, &q)| u64::from(p) == q), "{}", name);
        }
    }

    #[test]
    fn relabeling_commutes_with_transpose(lists in lists_strategy(), seed: u64) {
        // transpose(relabel(g)) == relabel(transpose(g)) under the same permutation
        let g = CsrGraph::from_adjacency(&lists, Orientation::Csr).unwrap();
        let (rg, _) = relabel_random(&g, seed);
        let (rt, _) = relabel_random(&transpose_oracle(&g), seed);
        let t = transpose_atomic(&rg, 2).unwrap();
        prop_assert!(sort_neighbor_lists(t, 2).graph == sorted_lists(&rt));
    }
}

#[test]
fn seeded_small_graphs_transpose_back() {
    for seed in 0..40 {
        let g = common::small_graph(seed);
        for (name, out) in all_transposes(&g, 3, seed) {
            let back = transpose_atomic(&out.graph, 2).unwrap();
            assert!(sort_neighbor_lists(back, 2).graph == sorted_lists(&g), "graph {seed}, {name}");
        }
    }
}
