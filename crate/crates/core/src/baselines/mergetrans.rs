use std::mem::size_of;

use super::{offsets_from_counts, Algorithm, PhaseTimes, Stopwatch, TransposeError, TransposeOutput};
use crate::graph::{CsrGraph, VertexId};
use crate::par;
use crate::sysinfo;

/// Subgraph size sized so that one subgraph's pairs fill about half of the
/// combined L2 and L3 capacity.
pub fn default_subgraph_edges(id_bytes: usize) -> usize {
    let cache = sysinfo::l2_plus_l3_bytes().unwrap_or(32 << 20);
    ((cache / (2 * 2 * id_bytes as u64)) as usize).max(1024)
}

/// Transposition by splitting the edge array into subgraphs, transposing each
/// one serially, and merging the partial transposes pairwise.
///
/// A transposed subgraph is kept as its (destination, source) pairs in
/// ascending order, which is the same information as a per-subgraph CSC but
/// without a |V|-sized offsets array per subgraph. Merges run round by round
/// with two ping-pong buffers; within a round the merges are spread over the
/// threads. Step 1 is the subgraph transposition, Step 2 the merge rounds, and
/// Step 3 the extraction of offsets and edges from the merged pairs. Output
/// lists are ascending.
pub fn transpose_mergetrans<I: VertexId>(
    g: &CsrGraph<I>,
    threads: usize,
    subgraph_edges: usize,
) -> Result<TransposeOutput<I>, TransposeError> {
    if subgraph_edges == 0 {
        return Err(TransposeError::InvalidParameter("subgraph size must be at least one edge".into()));
    }
    let threads = threads.max(1);
    let n = g.num_vertices();
    let m = g.num_edges();
    let mut sw = Stopwatch::start();

    let mut buf: Vec<(I, I)> = vec![(I::default(), I::default()); m];
    {
        let mut per_thread: Vec<Vec<(usize, &mut [(I, I)])>> = (0..threads).map(|_| Vec::new()).collect();
        for (c, chunk) in buf.chunks_mut(subgraph_edges).enumerate() {
            per_thread[c % threads].push((c, chunk));
        }
        par::for_each_owned(per_thread, |_, chunks| {
            for (c, chunk) in chunks {
                transpose_subgraph(g, c * subgraph_edges, chunk);
            }
        });
    }
    let step1 = sw.lap();

    let mut other: Vec<(I, I)> = vec![(I::default(), I::default()); m];
    let mut width = subgraph_edges;
    while width < m {
        merge_round(&buf, &mut other, width, threads);
        std::mem::swap(&mut buf, &mut other);
        width = width.saturating_mul(2);
    }
    drop(other);
    let step2 = sw.lap();

    let pairs = &buf;
    let t_offsets = offsets_from_counts(n, threads, |v| {
        let lo = pairs.partition_point(|p| p.0.index() < v);
        let hi = pairs[lo..].partition_point(|p| p.0.index() == v);
        hi as u64
    });
    let mut t_edges = vec![I::default(); m];
    let ranges = par::even_ranges(m, threads);
    let chunks = par::split_by_ranges(&mut t_edges, &ranges);
    par::for_each_owned(chunks.into_iter().zip(ranges).collect(), |_, (chunk, r)| {
        for (slot, p) in chunk.iter_mut().zip(&pairs[r]) {
            *slot = p.1;
        }
    });
    let step3 = sw.lap();

    Ok(TransposeOutput {
        graph: CsrGraph::from_parts_unchecked(t_offsets, t_edges, g.orientation().flipped()),
        phase_times: PhaseTimes { step0: None, step1, step2, step3, sort: None },
        aux_footprint_bytes: 2 * (m * size_of::<(I, I)>()) as u64,
        method: Algorithm::MergeTrans,
        sorted: true,
        potra: None,
    })
}

/// Fills `out` with the swapped pairs of edges `first..first + out.len()`,
/// sorted.
fn transpose_subgraph<I: VertexId>(g: &CsrGraph<I>, first: usize, out: &mut [(I, I)]) {
    let offsets = g.offsets();
    // owner of edge `first`: last vertex whose list starts at or before it
    let mut v = offsets.partition_point(|&o| o <= first as u64) - 1;
    for (i, slot) in out.iter_mut().enumerate() {
        let e = (first + i) as u64;
        while offsets[v + 1] <= e {
            v += 1;
        }
        *slot = (g.edges()[e as usize], I::from_index(v));
    }
    out.sort_unstable();
}

fn merge_round<I: VertexId>(src: &[(I, I)], dst: &mut [(I, I)], width: usize, threads: usize) {
    let mut per_thread: Vec<Vec<(&[(I, I)], &[(I, I)], &mut [(I, I)])>> = (0..threads).map(|_| Vec::new()).collect();
    for (j, (s, d)) in src.chunks(2 * width).zip(dst.chunks_mut(2 * width)).enumerate() {
        let (a, b) = s.split_at(width.min(s.len()));
        per_thread[j % threads].push((a, b, d));
    }
    par::for_each_owned(per_thread, |_, tasks| {
        for (a, b, d) in tasks {
            merge_into(a, b, d);
        }
    });
}

fn merge_into<T: Ord + Copy>(a: &[T], b: &[T], out: &mut [T]) {
    let (mut i, mut j) = (0, 0);
    for slot in out.iter_mut() {
        if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            *slot = a[i];
            i += 1;
        } else {
            *slot = b[j];
            j += 1;
        }
    }
}
