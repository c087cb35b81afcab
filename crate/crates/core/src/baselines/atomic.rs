use std::mem::size_of;
use std::sync::atomic::{AtomicU32, AtomicU64, AtomicUsize, Ordering};

use super::{
    atomic_u32_zeroed, check_counted, insertion_points, load_u32, offsets_from_counts, Algorithm, PhaseTimes,
    Stopwatch, TransposeError, TransposeOutput,
};
use crate::graph::{CsrGraph, VertexId};
use crate::par::{self, SharedSlice};

/// Edges per Step-3 work unit.
const STEP3_PARTITION_EDGES: u64 = 1 << 16;

/// Transposition with shared atomic counters and insertion points.
///
/// Step 1 counts endpoints with fetch-and-add, Step 2 scans the counters into
/// the transposed offsets and copies them as insertion points, and Step 3
/// reserves each output slot with fetch-and-add on the insertion point. The
/// order within each output list depends on thread interleaving.
pub fn transpose_atomic<I: VertexId>(g: &CsrGraph<I>, threads: usize) -> Result<TransposeOutput<I>, TransposeError> {
    let threads = threads.max(1);
    let n = g.num_vertices();
    let mut sw = Stopwatch::start();

    let counters = atomic_u32_zeroed(n);
    count_endpoints(g.edges(), &counters, threads);
    let step1 = sw.lap();

    let t_offsets = offsets_from_counts(n, threads, |v| load_u32(&counters[v]));
    check_counted(t_offsets[n], g.num_edges() as u64)?;
    let ip = insertion_points(&t_offsets, threads);
    let aux = (n * (size_of::<AtomicU32>() + size_of::<AtomicU64>())) as u64;
    drop(counters);
    let step2 = sw.lap();

    let mut t_edges = vec![I::default(); g.num_edges()];
    write_edges(g, &ip, &mut t_edges, threads);
    let step3 = sw.lap();

    Ok(TransposeOutput {
        graph: CsrGraph::from_parts_unchecked(t_offsets, t_edges, g.orientation().flipped()),
        phase_times: PhaseTimes { step0: None, step1, step2, step3, sort: None },
        aux_footprint_bytes: aux,
        method: Algorithm::Atomic,
        sorted: false,
        potra: None,
    })
}

pub(crate) fn count_endpoints<I: VertexId>(edges: &[I], counters: &[AtomicU32], threads: usize) {
    let ranges = par::even_ranges(edges.len(), threads);
    par::map_threads(threads, |tid| {
        for e in &edges[ranges[tid].clone()] {
            counters[e.index()].fetch_add(1, Ordering::Relaxed);
        }
    });
}

fn write_edges<I: VertexId>(g: &CsrGraph<I>, ip: &[AtomicU64], t_edges: &mut [I], threads: usize) {
    let parts = (g.num_edges() as u64).div_ceil(STEP3_PARTITION_EDGES).max(threads as u64) as usize;
    let partitions = par::edge_balanced_ranges(g.offsets(), parts);
    let next = AtomicUsize::new(0);
    let out = SharedSlice::new(t_edges);
    par::map_threads(threads, |_| loop {
        let p = next.fetch_add(1, Ordering::Relaxed);
        let Some(range) = partitions.get(p) else { break };
        for v in range.clone() {
            let src = I::from_index(v);
            for u in g.neighbors(v) {
                let index = ip[u.index()].fetch_add(1, Ordering::Relaxed);
                // SAFETY: fetch_add hands out each index exactly once.
                unsafe { out.write(index as usize, src) };
            }
        }
    });
}
