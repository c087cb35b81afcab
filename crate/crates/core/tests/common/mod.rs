#![allow(dead_code)]

use potra::graph::generate_skewed;
use potra::{CsrGraph, Orientation, Xoshiro256StarStar};

/// Seeded small graphs covering self-loops, parallel edges, isolated
/// vertices, unsorted input lists, empty graphs, and one graph whose edges
/// all point at a single vertex.
pub fn small_graph(seed: u64) -> CsrGraph<u32> {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed ^ 0x5eed);
    let orientation = if rng.next_below(2) == 0 { Orientation::Csr } else { Orientation::Csc };
    let lists: Vec<Vec<u32>> = match seed {
        0 => {
            // every edge points at vertex 3
            let n = 500;
            (0..n).map(|_| vec![3; rng.next_below(20) as usize]).collect()
        }
        1 => vec![Vec::new(); 17],
        2 => Vec::new(),
        _ => match seed % 5 {
            0 => random_lists(&mut rng, 1000, 10_000),
            1 => {
                let m = rng.next_below(60);
                random_lists_exact(&mut rng, 1000, m)
            },
            2 => {
                let n = 2 + rng.next_below(999) as usize;
                let m = rng.next_below(10_001) as usize;
                let exponent = 0.6 + rng.next_f64();
                let g = generate_skewed(n, m, exponent, seed).unwrap();
                return shuffle_lists(g.with_orientation(orientation), &mut rng);
            }
            3 => random_lists(&mut rng, 5, 40),
            _ => random_lists(&mut rng, 30, 10_000),
        },
    };
    with_loops_and_duplicates(CsrGraph::from_adjacency(&lists, orientation).unwrap(), &mut rng)
}

/// Up to `max_n` vertices and `max_m` uniformly placed edges.
fn random_lists(rng: &mut Xoshiro256StarStar, max_n: u64, max_m: u64) -> Vec<Vec<u32>> {
    let n = 1 + rng.next_below(max_n);
    let m = rng.next_below(max_m + 1);
    random_lists_exact(rng, n, m)
}

fn random_lists_exact(rng: &mut Xoshiro256StarStar, n: u64, m: u64) -> Vec<Vec<u32>> {
    let n = n as usize;
    let mut lists = vec![Vec::new(); n];
    for _ in 0..m {
        let s = rng.next_below(n as u64) as usize;
        lists[s].push(rng.next_below(n as u64) as u32);
    }
    lists
}

fn with_loops_and_duplicates(g: CsrGraph<u32>, rng: &mut Xoshiro256StarStar) -> CsrGraph<u32> {
    let n = g.num_vertices();
    if n == 0 || g.num_edges() >= 10_000 {
        return g;
    }
    let mut lists: Vec<Vec<u32>> = (0..n).map(|v| g.neighbors(v).to_vec()).collect();
    let budget = 10_000 - g.num_edges();
    for _ in 0..budget.min(3) {
        let v = rng.next_below(n as u64) as usize;
        lists[v].push(v as u32);
        if let Some(&first) = lists[v].first() {
            lists[v].push(first);
        }
    }
    let g2 = CsrGraph::from_adjacency(&lists, g.orientation()).unwrap();
    if g2.num_edges() <= 10_000 {
        g2
    } else {
        g
    }
}

fn shuffle_lists(g: CsrGraph<u32>, rng: &mut Xoshiro256StarStar) -> CsrGraph<u32> {
    let o = g.orientation();
    let mut lists: Vec<Vec<u32>> = (0..g.num_vertices()).map(|v| g.neighbors(v).to_vec()).collect();
    for l in &mut lists {
        for i in (1..l.len()).rev() {
            l.swap(i, rng.next_below(i as u64 + 1) as usize);
        }
    }
    CsrGraph::from_adjacency(&lists, o).unwrap()
}

/// Transposed degree of every vertex by direct counting.
pub fn endpoint_degrees(g: &CsrGraph<u32>) -> Vec<u64> {
    let mut d = vec![0u64; g.num_vertices()];
    for &e in g.edges() {
        d[e as usize] += 1;
    }
    d
}
