use std::cmp::Ordering as CmpOrdering;
use std::sync::atomic::{AtomicU32, Ordering};

use serde::Serialize;

use super::table::HdvTable;
use crate::baselines::atomic_u32_zeroed;
use crate::graph::{CsrGraph, VertexId};
use crate::memlat::Xoshiro256StarStar;
use crate::par;

/// The selected high-degree endpoints and their lookup table.
#[derive(Clone, Debug)]
pub struct HdvPlan {
    /// Selected vertex IDs, most frequent first; `hdv_ids[i]` has index `i`.
    pub hdv_ids: Vec<u64>,
    pub table: HdvTable,
    /// Fraction of sampled endpoints that hit a selected vertex.
    pub coverage_estimate: f64,
    pub sample_size: u64,
    /// True when every edge was counted instead of sampled.
    pub exhaustive: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanSummary {
    pub k: usize,
    pub coverage_estimate: f64,
    pub sample_size: u64,
    pub exhaustive: bool,
    pub table_bytes: u64,
}

impl HdvPlan {
    pub fn empty() -> Self {
        Self::from_ids(Vec::new(), 0.5)
    }

    pub fn from_ids(hdv_ids: Vec<u64>, load_factor: f64) -> Self {
        let table = HdvTable::new(&hdv_ids, load_factor);
        Self { hdv_ids, table, coverage_estimate: 0.0, sample_size: 0, exhaustive: false }
    }

    pub fn k(&self) -> usize {
        self.hdv_ids.len()
    }

    #[inline]
    pub fn lookup(&self, v: u64) -> Option<u32> {
        self.table.lookup(v)
    }

    pub fn summary(&self) -> PlanSummary {
        PlanSummary {
            k: self.k(),
            coverage_estimate: self.coverage_estimate,
            sample_size: self.sample_size,
            exhaustive: self.exhaustive,
            table_bytes: self.table.bytes(),
        }
    }
}

/// Exact fraction of edge entries whose endpoint is a selected HDV.
pub fn coverage_exact<I: VertexId>(g: &CsrGraph<I>, plan: &HdvPlan) -> f64 {
    if g.num_edges() == 0 {
        return 0.0;
    }
    let hits = g.edges().iter().filter(|e| plan.lookup(e.to_u64()).is_some()).count();
    hits as f64 / g.num_edges() as f64
}

/// Samples endpoints and selects the `k` most frequent as HDV.
pub fn sample_hdv<I: VertexId>(
    g: &CsrGraph<I>,
    k: usize,
    sample_fraction: f64,
    seed: u64,
    threads: usize,
    load_factor: f64,
) -> HdvPlan {
    let freq = atomic_u32_zeroed(g.num_vertices());
    sample_with(g, &freq, k, sample_fraction, seed, threads, load_factor)
}

/// Number of endpoint samples drawn for a sample fraction of |V|.
pub fn sample_count(num_vertices: usize, sample_fraction: f64) -> u64 {
    (sample_fraction * num_vertices as f64).ceil().max(0.0) as u64
}

/// Sampling with a caller-provided zeroed frequency array, which is left
/// zeroed again on return.
pub(crate) fn sample_with<I: VertexId>(
    g: &CsrGraph<I>,
    freq: &[AtomicU32],
    k: usize,
    sample_fraction: f64,
    seed: u64,
    threads: usize,
    load_factor: f64,
) -> HdvPlan {
    let threads = threads.max(1);
    let n = g.num_vertices();
    let m = g.num_edges();
    let k = k.min(n);
    if k == 0 || m == 0 {
        return HdvPlan::from_ids(Vec::new(), load_factor);
    }
    let wanted = sample_count(n, sample_fraction);
    let exhaustive = wanted >= m as u64;
    let edges = g.edges();
    let edge_ranges = par::even_ranges(m, threads);
    let per_thread = par::even_ranges(wanted.min(u64::from(u32::MAX)) as usize, threads);
    par::map_threads(threads, |tid| {
        let range = edge_ranges[tid].clone();
        if exhaustive {
            for e in &edges[range] {
                freq[e.index()].fetch_add(1, Ordering::Relaxed);
            }
        } else if !range.is_empty() {
            let mut rng = Xoshiro256StarStar::stream(seed, tid as u64);
            let span = range.len() as u64;
            for _ in per_thread[tid].clone() {
                let pos = range.start + rng.next_below(span) as usize;
                freq[edges[pos].index()].fetch_add(1, Ordering::Relaxed);
            }
        }
    });
    // drawn samples: a thread with an empty edge range draws none
    let samples: u64 = if exhaustive {
        m as u64
    } else {
        (0..threads).filter(|&t| !edge_ranges[t].is_empty()).map(|t| per_thread[t].len() as u64).sum()
    };

    // collect non-zero frequencies and reset the array for reuse
    let vranges = par::even_ranges(n, threads);
    let mut candidates: Vec<(u32, u64)> = par::map_threads(threads, |tid| {
        let mut local = Vec::new();
        for v in vranges[tid].clone() {
            let f = freq[v].swap(0, Ordering::Relaxed);
            if f > 0 {
                local.push((f, v as u64));
            }
        }
        local
    })
    .into_iter()
    .flatten()
    .collect();

    let by_rank = |a: &(u32, u64), b: &(u32, u64)| -> CmpOrdering { b.0.cmp(&a.0).then(a.1.cmp(&b.1)) };
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, by_rank);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_rank);
    let hits: u64 = candidates.iter().map(|c| u64::from(c.0)).sum();
    let hdv_ids: Vec<u64> = candidates.into_iter().map(|c| c.1).collect();
    let mut plan = HdvPlan::from_ids(hdv_ids, load_factor);
    plan.sample_size = samples;
    plan.exhaustive = exhaustive;
    plan.coverage_estimate = if samples == 0 { 0.0 } else { hits as f64 / samples as f64 };
    plan
}
