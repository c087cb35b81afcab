use super::{check_counted, Algorithm, PhaseTimes, Stopwatch, TransposeError, TransposeOutput};
use crate::graph::{CsrGraph, VertexId};
use crate::par::{self, SharedSlice};
use crate::sysinfo;

/// Auxiliary bytes ScanTrans needs: one 32-bit counter per vertex per thread.
pub fn scantrans_footprint(num_vertices: usize, threads: usize) -> u64 {
    threads.max(1) as u64 * num_vertices as u64 * 4
}

/// Transposition with per-thread private counters and no atomics.
///
/// Each thread owns an edge-balanced range of source vertices. Step 1 counts
/// endpoints into the thread's own counter array; Step 2 turns the per-thread
/// counts into per-thread insertion points, relative to the transposed
/// offsets, with a column scan over threads; Step 3 has every thread revisit
/// its range. Because ranges are ordered by source ID, every output list is
/// ascending.
///
/// The counters are checked against `footprint_limit` (bytes) before anything
/// is allocated; `None` uses the available system memory.
pub fn transpose_scantrans<I: VertexId>(
    g: &CsrGraph<I>,
    threads: usize,
    footprint_limit: Option<u64>,
) -> Result<TransposeOutput<I>, TransposeError> {
    let threads = threads.max(1);
    let n = g.num_vertices();
    let m = g.num_edges();
    let required = scantrans_footprint(n, threads);
    if let Some(limit) = footprint_limit.or_else(sysinfo::available_memory_bytes) {
        if required > limit {
            return Err(TransposeError::FootprintExceedsLimit { required, limit });
        }
    }

    let mut sw = Stopwatch::start();
    let ranges = par::edge_balanced_ranges(g.offsets(), threads);
    let mut counters: Vec<Vec<u32>> = (0..threads).map(|_| vec![0u32; n]).collect();
    par::for_each_owned(counters.iter_mut().zip(ranges.iter().cloned()).collect(), |_, (c, r)| {
        let edges = &g.edges()[g.offsets()[r.start] as usize..g.offsets()[r.end] as usize];
        for e in edges {
            let slot = &mut c[e.index()];
            *slot = slot.wrapping_add(1);
        }
    });
    let step1 = sw.lap();

    // Column scan: counters[t][v] becomes the number of v's in-edges counted
    // by threads before t; the total goes to the output offsets.
    let mut t_offsets = vec![0u64; n + 1];
    let blocks = par::even_ranges(n, threads);
    {
        let columns = par::split_columns(&mut counters, &blocks);
        let degree_chunks = par::split_by_ranges(&mut t_offsets[1..], &blocks);
        let work: Vec<_> = columns.into_iter().zip(degree_chunks).collect();
        par::for_each_owned(work, |_, (mut cols, degrees)| {
            for (i, d) in degrees.iter_mut().enumerate() {
                let mut run = 0u64;
                for col in cols.iter_mut() {
                    let c = u64::from(col[i]);
                    // a relative position past u32 cannot be stored
                    col[i] = run.min(u64::from(u32::MAX)) as u32;
                    run += c;
                }
                *d = run;
            }
        });
    }
    if t_offsets[1..].iter().any(|&d| d > u64::from(u32::MAX)) {
        let counted: u64 = t_offsets[1..].iter().sum();
        return Err(TransposeError::CounterOverflow { counted, expected: m as u64 });
    }
    par::inclusive_scan_in_place(&mut t_offsets[1..], threads);
    check_counted(t_offsets[n], m as u64)?;
    let step2 = sw.lap();

    let mut t_edges = vec![I::default(); m];
    {
        let out = SharedSlice::new(&mut t_edges);
        let t_offsets = &t_offsets;
        let out = &out;
        par::for_each_owned(counters.iter_mut().zip(ranges).collect(), |_, (ip, r)| {
            for v in r {
                let src = I::from_index(v);
                for u in g.neighbors(v) {
                    let u = u.index();
                    let index = t_offsets[u] + u64::from(ip[u]);
                    ip[u] += 1;
                    // SAFETY: thread t's slots for u are t_offsets[u] plus
                    // [before_t, before_t + count_t), disjoint across threads.
                    unsafe { out.write(index as usize, src) };
                }
            }
        });
    }
    let step3 = sw.lap();

    Ok(TransposeOutput {
        graph: CsrGraph::from_parts_unchecked(t_offsets, t_edges, g.orientation().flipped()),
        phase_times: PhaseTimes { step0: None, step1, step2, step3, sort: None },
        aux_footprint_bytes: required,
        method: Algorithm::ScanTrans,
        sorted: true,
        potra: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_skewed, sample_graph, transpose_oracle};

    #[test]
    fn matches_oracle_exactly() {
        assert_eq!(transpose_scantrans(&sample_graph(), 2, None).unwrap().graph, transpose_oracle(&sample_graph()));
        let g = generate_skewed(5000, 80_000, 1.2, 3).unwrap();
        let oracle = transpose_oracle(&g);
        for threads in [1, 3, 8] {
            let t = transpose_scantrans(&g, threads, None).unwrap();
            assert!(t.sorted);
            assert_eq!(t.graph, oracle, "threads={threads}");
        }
    }

    #[test]
    fn footprint_scales_with_threads() {
        let g = generate_skewed(1000, 4000, 1.0, 1).unwrap();
        assert_eq!(transpose_scantrans(&g, 1, None).unwrap().aux_footprint_bytes, 4000);
        assert_eq!(transpose_scantrans(&g, 4, None).unwrap().aux_footprint_bytes, 16_000);
    }

    #[test]
    fn precheck_refuses_before_allocating() {
        let g = generate_skewed(1000, 4000, 1.0, 1).unwrap();
        let err = transpose_scantrans(&g, 4, Some(15_999)).unwrap_err();
        assert!(err.to_string().contains("footprint exceeds limit"));
        assert!(matches!(err, TransposeError::FootprintExceedsLimit { required: 16_000, limit: 15_999 }));
    }

    #[test]
    fn more_threads_than_edges() {
        let g = sample_graph();
        assert_eq!(transpose_scantrans(&g, 32, None).unwrap().graph, transpose_oracle(&g));
    }
}
