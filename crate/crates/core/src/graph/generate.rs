//! Synthetic graphs with a skewed in-degree distribution.

use rand_distr::{Distribution, Zipf};

use super::{CsrGraph, GraphError, Orientation};
use crate::memlat::Xoshiro256StarStar;

/// Generates a CSR graph with `num_edges` edges whose sources are uniform over
/// the vertices and whose destinations follow a Zipf law with the given
/// exponent (destination rank `r` maps to vertex `r - 1`).
///
/// Output is a deterministic function of the arguments. Neighbor lists are
/// sorted ascending.
pub fn generate_skewed(
    num_vertices: usize,
    num_edges: usize,
    zipf_exponent: f64,
    seed: u64,
) -> Result<CsrGraph<u32>, GraphError> {
    if !(zipf_exponent.is_finite() && zipf_exponent > 0.0) {
        return Err(GraphError::InvalidParameter(format!("zipf exponent must be > 0, got {zipf_exponent}")));
    }
    if num_vertices as u64 > 1u64 << 32 {
        return Err(GraphError::InvalidParameter("generator emits 32-bit IDs; |V| must be <= 2^32".into()));
    }
    if num_vertices == 0 {
        if num_edges > 0 {
            return Err(GraphError::InvalidParameter("edges requested on an empty vertex set".into()));
        }
        return Ok(CsrGraph::empty(Orientation::Csr));
    }
    let zipf = Zipf::new(num_vertices as f64, zipf_exponent)
        .map_err(|e| GraphError::InvalidParameter(format!("zipf: {e}")))?;
    let n = num_vertices as u64;

    // sources and destinations come from independent streams so the source
    // sequence can be replayed for the scatter pass
    let sources = || Xoshiro256StarStar::stream(seed, 0);
    let mut src_rng = sources();
    let mut offsets = vec![0u64; num_vertices + 1];
    for _ in 0..num_edges {
        offsets[src_rng.next_below(n) as usize + 1] += 1;
    }
    for v in 0..num_vertices {
        offsets[v + 1] += offsets[v];
    }

    let mut cursor: Vec<u64> = offsets[..num_vertices].to_vec();
    let mut edges = vec![0u32; num_edges];
    let mut src_rng = sources();
    let mut dst_rng = Xoshiro256StarStar::stream(seed, 1);
    for _ in 0..num_edges {
        let s = src_rng.next_below(n) as usize;
        let rank: f64 = zipf.sample(&mut dst_rng);
        let d = (rank as u64).clamp(1, n) - 1;
        edges[cursor[s] as usize] = d as u32;
        cursor[s] += 1;
    }
    drop(cursor);
    for w in offsets.windows(2) {
        edges[w[0] as usize..w[1] as usize].sort_unstable();
    }
    Ok(CsrGraph::from_parts_unchecked(offsets, edges, Orientation::Csr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::degree_stats;
    use crate::graph::DegreeDirection;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_skewed(10_000, 100_000, 1.0, 42).unwrap();
        let b = generate_skewed(10_000, 100_000, 1.0, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_skewed(10_000, 100_000, 1.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_edges() {
        let g = generate_skewed(100, 0, 1.0, 1).unwrap();
        assert!(g.offsets().iter().all(|&o| o == 0));
        assert_eq!(g.num_vertices(), 100);
    }

    #[test]
    fn larger_exponent_concentrates_endpoints() {
        // exact in-degree counts of both outputs
        let top_share = |e: f64| {
            let g = generate_skewed(5_000, 50_000, e, 9).unwrap();
            let s = degree_stats(&g, DegreeDirection::OfEndpoints, &[]);
            s.max_degree as f64 / g.num_edges() as f64
        };
        assert!(top_share(3.0) > top_share(1.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate_skewed(10, 10, 0.0, 1).is_err());
        assert!(generate_skewed(10, 10, f64::NAN, 1).is_err());
        assert!(generate_skewed(0, 10, 1.0, 1).is_err());
        assert_eq!(generate_skewed(0, 0, 1.0, 1).unwrap().num_vertices(), 0);
    }

    #[test]
    fn output_is_valid() {
        let g = generate_skewed(1000, 20_000, 1.2, 3).unwrap();
        let (o, e, _) = g.clone().into_parts();
        assert!(CsrGraph::from_parts(o, e, Orientation::Csr).is_ok());
        assert!(g.lists_sorted());
    }
}
