//! PoTra: cache-budgeted hybrid transposition.
//!
//! A small set of frequently referenced endpoints (HDV) gets private,
//! non-atomic, byte-packed counters per thread; every other endpoint (LDV)
//! goes through shared atomic counters as in the atomic baseline. Step 0
//! picks the HDV by sampling and decides by a timed probe whether the hybrid
//! (HLH) method or plain atomics should run.

mod sample;
mod table;

use std::fmt;
use std::hint::black_box;
use std::mem::size_of;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    atomic_u32_zeroed, check_counted, insertion_points, transpose_atomic, Algorithm, PhaseTimes, Stopwatch,
    TransposeError, TransposeOutput,
};
use crate::graph::{CsrGraph, VertexId};
use crate::memlat::Xoshiro256StarStar;
use crate::model::{hdv_count, HdvBudget};
use crate::par::{self, SharedSlice};

pub use sample::{coverage_exact, sample_count, sample_hdv, HdvPlan, PlanSummary};
pub use table::HdvTable;

pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.01;
pub const DEFAULT_PARTITION_EDGES: usize = 1 << 18;
pub const MAX_DEFAULT_PROBE_EDGES: u64 = 1 << 24;

/// Per-thread bytes held for each HDV across Steps 1 to 3.
const HDV_STATE_BYTES: u64 = (size_of::<u8>() + size_of::<u32>() + size_of::<u64>()) as u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Atomic,
    Hlh,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Atomic => "atomic",
            Method::Hlh => "hlh",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "atomic" => Ok(Method::Atomic),
            "hlh" => Ok(Method::Hlh),
            _ => Err(format!("unknown method {s:?} (expected atomic or hlh)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotraOptions {
    /// Endpoint samples as a fraction of |V|, in (0, 1].
    pub sample_fraction: f64,
    /// Edges timed per method; `None` means 1% of |E| capped at 2^24.
    pub probe_edges: Option<u64>,
    /// Skips the probe.
    pub force_method: Option<Method>,
    pub seed: u64,
    /// Edges per dynamically claimed partition.
    pub partition_edges: usize,
    /// Run a full pass to report the exact coverage of the selected HDV.
    pub exact_coverage: bool,
}

impl Default for PotraOptions {
    fn default() -> Self {
        Self {
            sample_fraction: DEFAULT_SAMPLE_FRACTION,
            probe_edges: None,
            force_method: None,
            seed: 0,
            partition_edges: DEFAULT_PARTITION_EDGES,
            exact_coverage: false,
        }
    }
}

impl PotraOptions {
    pub fn forced(method: Method) -> Self {
        Self { force_method: Some(method), ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeDecision {
    pub method: Method,
    pub probe_edges: u64,
    pub atomic_ns_per_edge: f64,
    pub hlh_ns_per_edge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotraDetails {
    pub method: Method,
    /// HDV actually selected.
    pub k: usize,
    /// HDV allowed by the cache budget.
    pub k_budget: u64,
    pub cache_budget_bytes: u64,
    pub coverage_estimate: f64,
    pub coverage_exact: Option<f64>,
    pub sample_size: u64,
    pub probe: Option<ProbeDecision>,
    /// Hash table plus per-thread HDV counters and insertion points.
    pub hdv_footprint_bytes: u64,
    pub partitions: usize,
    /// (max - mean) / mean of per-thread Step-3 time.
    pub step3_imbalance: Option<f64>,
}

/// Step-1 state of the HLH method.
#[derive(Debug)]
pub struct HlhCounters {
    pub ldv_counters: Vec<AtomicU32>,
    /// `hdv_low[tid][j]`: low byte of thread `tid`'s count for HDV `j`.
    pub hdv_low: Vec<Vec<u8>>,
    /// `hdv_high[tid][j]`: number of times that low byte wrapped.
    pub hdv_high: Vec<Vec<u32>>,
    /// Thread that counted each edge partition.
    pub part2tid: Vec<u32>,
}

impl HlhCounters {
    pub fn hdv_count(&self, tid: usize, j: usize) -> u64 {
        u64::from(self.hdv_high[tid][j]) * 256 + u64::from(self.hdv_low[tid][j])
    }

    pub fn hdv_total(&self, j: usize) -> u64 {
        (0..self.hdv_low.len()).map(|t| self.hdv_count(t, j)).sum()
    }

    /// Transposed degree of `v`: the shared counter for LDV, the sum of the
    /// per-thread split counters for HDV.
    pub fn assembled_degree(&self, plan: &HdvPlan, v: usize) -> u64 {
        match plan.lookup(v as u64) {
            Some(j) => self.hdv_total(j as usize),
            None => u64::from(self.ldv_counters[v].load(Ordering::Relaxed)),
        }
    }
}

#[inline]
fn count_slice<I: VertexId>(edges: &[I], plan: &HdvPlan, counters: &[AtomicU32], low: &mut [u8], high: &mut [u32]) {
    for e in edges {
        match plan.lookup(e.to_u64()) {
            Some(j) => {
                let j = j as usize;
                low[j] = low[j].wrapping_add(1);
                if low[j] == 0 {
                    high[j] += 1;
                }
            }
            None => {
                counters[e.index()].fetch_add(1, Ordering::Relaxed);
            }
        }
    }
}

fn partition_range(p: usize, size: usize, m: usize) -> std::ops::Range<usize> {
    p * size..((p + 1) * size).min(m)
}

/// Step 1 of the HLH method: equal-edge partitions claimed dynamically.
pub fn count_hlh<I: VertexId>(g: &CsrGraph<I>, plan: &HdvPlan, threads: usize, partition_edges: usize) -> HlhCounters {
    count_hlh_into(g, plan, atomic_u32_zeroed(g.num_vertices()), threads, partition_edges)
}

fn count_hlh_into<I: VertexId>(
    g: &CsrGraph<I>,
    plan: &HdvPlan,
    ldv_counters: Vec<AtomicU32>,
    threads: usize,
    partition_edges: usize,
) -> HlhCounters {
    let threads = threads.max(1);
    let m = g.num_edges();
    let size = partition_edges.max(1);
    let parts = m.div_ceil(size);
    let k = plan.k();
    let part2tid: Vec<AtomicU32> = (0..parts).map(|_| AtomicU32::new(u32::MAX)).collect();
    let next = AtomicUsize::new(0);
    let counters = &ldv_counters;
    let per_thread = par::map_threads(threads, |tid| {
        let mut low = vec![0u8; k];
        let mut high = vec![0u32; k];
        loop {
            let p = next.fetch_add(1, Ordering::Relaxed);
            if p >= parts {
                break;
            }
            part2tid[p].store(tid as u32, Ordering::Relaxed);
            count_slice(&g.edges()[partition_range(p, size, m)], plan, counters, &mut low, &mut high);
        }
        (low, high)
    });
    let (hdv_low, hdv_high) = per_thread.into_iter().unzip();
    HlhCounters {
        ldv_counters,
        hdv_low,
        hdv_high,
        part2tid: part2tid.into_iter().map(AtomicU32::into_inner).collect(),
    }
}

/// Default probe size: 1% of |E| (at least one edge), capped at 2^24.
pub fn default_probe_edges(num_edges: usize) -> u64 {
    (num_edges as u64).div_ceil(100).min(MAX_DEFAULT_PROBE_EDGES)
}

/// Times Step-1 counting of a window of `probe_edges` edges under both
/// methods, into scratch counters that are discarded, and picks the faster.
pub fn probe_methods<I: VertexId>(
    g: &CsrGraph<I>,
    plan: &HdvPlan,
    probe_edges: u64,
    threads: usize,
    seed: u64,
) -> ProbeDecision {
    let scratch = atomic_u32_zeroed(g.num_vertices());
    probe_with(g, plan, &scratch, probe_edges, threads, seed)
}

fn probe_with<I: VertexId>(
    g: &CsrGraph<I>,
    plan: &HdvPlan,
    scratch: &[AtomicU32],
    probe_edges: u64,
    threads: usize,
    seed: u64,
) -> ProbeDecision {
    let threads = threads.max(1);
    let m = g.num_edges();
    let p = probe_edges.min(m as u64) as usize;
    if p == 0 {
        warn!("probe over zero edges; using the atomic method");
        return ProbeDecision { method: Method::Atomic, probe_edges: 0, atomic_ns_per_edge: 0.0, hlh_ns_per_edge: 0.0 };
    }
    let start = if m > p { Xoshiro256StarStar::stream(seed, 2).next_below((m - p + 1) as u64) as usize } else { 0 };
    let window = &g.edges()[start..start + p];
    let ranges = par::even_ranges(p, threads);
    black_box(window.iter().fold(0u64, |a, e| a.wrapping_add(e.to_u64())));

    let k = plan.k();
    let (mut atomic_s, mut hlh_s) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..2 {
        let t = Instant::now();
        par::map_threads(threads, |tid| {
            for e in &window[ranges[tid].clone()] {
                scratch[e.index()].fetch_add(1, Ordering::Relaxed);
            }
        });
        atomic_s = atomic_s.min(t.elapsed().as_secs_f64());

        let t = Instant::now();
        par::map_threads(threads, |tid| {
            let mut low = vec![0u8; k];
            let mut high = vec![0u32; k];
            count_slice(&window[ranges[tid].clone()], plan, scratch, &mut low, &mut high);
            black_box((low, high));
        });
        hlh_s = hlh_s.min(t.elapsed().as_secs_f64());
    }
    for e in window {
        scratch[e.index()].store(0, Ordering::Relaxed);
    }
    let atomic_ns_per_edge = atomic_s * 1e9 / p as f64;
    let hlh_ns_per_edge = hlh_s * 1e9 / p as f64;
    ProbeDecision {
        method: if hlh_ns_per_edge < atomic_ns_per_edge { Method::Hlh } else { Method::Atomic },
        probe_edges: p as u64,
        atomic_ns_per_edge,
        hlh_ns_per_edge,
    }
}

/// Records every Step-3 write in debug builds on graphs up to 2^24 edges.
struct WriteOnce {
    bits: Option<Vec<AtomicU64>>,
}

impl WriteOnce {
    fn new(m: usize) -> Self {
        let enabled = cfg!(debug_assertions) && m <= 1 << 24;
        Self { bits: enabled.then(|| (0..m.div_ceil(64)).map(|_| AtomicU64::new(0)).collect()) }
    }

    #[inline]
    fn mark(&self, i: usize) {
        if let Some(bits) = &self.bits {
            let bit = 1u64 << (i % 64);
            let prev = bits[i / 64].fetch_or(bit, Ordering::Relaxed);
            assert!(prev & bit == 0, "output slot {i} written twice");
        }
    }

    fn assert_complete(&self, m: usize) {
        if let Some(bits) = &self.bits {
            let set: u64 = bits.iter().map(|b| u64::from(b.load(Ordering::Relaxed).count_ones())).sum();
            assert_eq!(set, m as u64, "output slots left unwritten");
        }
    }
}

/// Full PoTra transposition.
pub fn transpose_potra<I: VertexId>(
    g: &CsrGraph<I>,
    threads: usize,
    budget: &HdvBudget,
    opts: &PotraOptions,
) -> Result<TransposeOutput<I>, TransposeError> {
    let threads = threads.max(1);
    let budget = HdvBudget { threads, ..*budget };
    budget.validate().map_err(TransposeError::InvalidParameter)?;
    if !(opts.sample_fraction > 0.0 && opts.sample_fraction <= 1.0) {
        return Err(TransposeError::InvalidParameter(format!(
            "sample fraction must be in (0, 1], got {}",
            opts.sample_fraction
        )));
    }
    if opts.partition_edges == 0 {
        return Err(TransposeError::InvalidParameter("partition size must be at least one edge".into()));
    }
    let n = g.num_vertices();
    let m = g.num_edges();
    let mut sw = Stopwatch::start();

    // Step 0: the LDV counter array doubles as the sampling frequency array
    // and the probe scratch array; both leave it zeroed.
    let (k_budget, _) = hdv_count(&budget);
    let counters = atomic_u32_zeroed(n);
    // a forced atomic run never consults the HDV set
    let k_target = if opts.force_method == Some(Method::Atomic) { 0 } else { k_budget.min(n as u64) as usize };
    let plan = sample::sample_with(
        g,
        &counters,
        k_target,
        opts.sample_fraction,
        opts.seed,
        threads,
        budget.load_factor,
    );
    let (method, probe) = match opts.force_method {
        Some(method) => (method, None),
        None => {
            let edges = opts.probe_edges.unwrap_or_else(|| default_probe_edges(m));
            let d = probe_with(g, &plan, &counters, edges, threads, opts.seed);
            (d.method, Some(d))
        }
    };
    let coverage_exact = opts.exact_coverage.then(|| coverage_exact(g, &plan));
    let parts = m.div_ceil(opts.partition_edges);
    let hdv_footprint_bytes = plan.table.bytes() + threads as u64 * plan.k() as u64 * HDV_STATE_BYTES;
    let mut details = PotraDetails {
        method,
        k: plan.k(),
        k_budget,
        cache_budget_bytes: budget.cache_bytes,
        coverage_estimate: plan.coverage_estimate,
        coverage_exact,
        sample_size: plan.sample_size,
        probe,
        hdv_footprint_bytes,
        partitions: parts,
        step3_imbalance: None,
    };
    let step0 = sw.lap();

    if method == Method::Atomic {
        let step0_peak = (n * size_of::<AtomicU32>()) as u64 + plan.table.bytes();
        drop(counters);
        drop(plan);
        let mut out = transpose_atomic(g, threads)?;
        out.phase_times.step0 = Some(step0);
        out.method = Algorithm::Potra;
        out.aux_footprint_bytes = out.aux_footprint_bytes.max(step0_peak);
        details.hdv_footprint_bytes = 0;
        details.partitions = 0;
        out.potra = Some(details);
        return Ok(out);
    }

    // Step 1
    let hlh = count_hlh_into(g, &plan, counters, threads, opts.partition_edges);
    let step1 = sw.lap();

    // Step 2
    let k = plan.k();
    let hdv_totals: Vec<u64> = (0..k).map(|j| hlh.hdv_total(j)).collect();
    let mut t_offsets = vec![0u64; n + 1];
    {
        let ranges = par::even_ranges(n, threads);
        let chunks = par::split_by_ranges(&mut t_offsets[1..], &ranges);
        let ldv = &hlh.ldv_counters;
        par::for_each_owned(chunks.into_iter().zip(ranges).collect(), |_, (chunk, r)| {
            for (slot, v) in chunk.iter_mut().zip(r) {
                *slot = u64::from(ldv[v].load(Ordering::Relaxed));
            }
        });
    }
    for (j, &id) in plan.hdv_ids.iter().enumerate() {
        t_offsets[id as usize + 1] += hdv_totals[j];
    }
    par::inclusive_scan_in_place(&mut t_offsets[1..], threads);
    check_counted(t_offsets[n], m as u64)?;
    let ldv_ip = insertion_points(&t_offsets, threads);
    let mut hdv_ip: Vec<Vec<u64>> = Vec::with_capacity(threads);
    let mut running: Vec<u64> = plan.hdv_ids.iter().map(|&id| t_offsets[id as usize]).collect();
    for tid in 0..threads {
        hdv_ip.push(running.clone());
        for (j, r) in running.iter_mut().enumerate() {
            *r += hlh.hdv_count(tid, j);
        }
    }
    let hdv_ip_start = cfg!(debug_assertions).then(|| hdv_ip.clone());
    let HlhCounters { ldv_counters, part2tid, .. } = hlh;
    let aux_footprint_bytes = (n * (size_of::<AtomicU32>() + size_of::<AtomicU64>())) as u64
        + (part2tid.len() * size_of::<u32>()) as u64
        + hdv_footprint_bytes;
    drop(ldv_counters);
    let step2 = sw.lap();

    // Step 3: each thread revisits exactly the partitions it counted.
    let mut t_edges = vec![I::default(); m];
    let written = WriteOnce::new(m);
    let hdv_ip: Vec<Mutex<Vec<u64>>> = hdv_ip.into_iter().map(Mutex::new).collect();
    let step3_times = {
        let out = SharedSlice::new(&mut t_edges);
        let (out, plan, part2tid, ldv_ip, written, hdv_ip) = (&out, &plan, &part2tid, &ldv_ip, &written, &hdv_ip);
        let offsets = g.offsets();
        let size = opts.partition_edges;
        par::map_threads(threads, |tid| {
            let t = Instant::now();
            let mut ip = hdv_ip[tid].lock().unwrap_or_else(|e| e.into_inner());
            for (p, _) in part2tid.iter().enumerate().filter(|(_, &owner)| owner as usize == tid) {
                let range = partition_range(p, size, m);
                let mut v = offsets.partition_point(|&o| o <= range.start as u64) - 1;
                for i in range {
                    while offsets[v + 1] <= i as u64 {
                        v += 1;
                    }
                    let u = g.edges()[i];
                    let index = match plan.lookup(u.to_u64()) {
                        Some(j) => {
                            let slot = &mut ip[j as usize];
                            let index = *slot;
                            *slot += 1;
                            index
                        }
                        None => ldv_ip[u.index()].fetch_add(1, Ordering::Relaxed),
                    } as usize;
                    written.mark(index);
                    // SAFETY: LDV slots come from fetch_add on a shared cursor;
                    // HDV slots from this thread's private sub-range.
                    unsafe { out.write(index, I::from_index(v)) };
                }
            }
            t.elapsed().as_secs_f64()
        })
    };
    written.assert_complete(m);
    if let Some(start) = hdv_ip_start {
        // each thread consumed exactly the HDV slots it counted in Step 1
        for tid in 0..threads {
            let end = hdv_ip[tid].lock().unwrap_or_else(|e| e.into_inner());
            for j in 0..k {
                let limit = if tid + 1 < threads { start[tid + 1][j] } else { t_offsets[plan.hdv_ids[j] as usize + 1] };
                assert_eq!(end[j], limit, "thread {tid} HDV {j}: Step 3 diverged from Step 1");
            }
        }
    }
    let step3 = sw.lap();
    details.step3_imbalance = imbalance(&step3_times);

    Ok(TransposeOutput {
        graph: CsrGraph::from_parts_unchecked(t_offsets, t_edges, g.orientation().flipped()),
        phase_times: PhaseTimes { step0: Some(step0), step1, step2, step3, sort: None },
        aux_footprint_bytes,
        method: Algorithm::Potra,
        sorted: false,
        potra: Some(details),
    })
}

fn imbalance(times: &[f64]) -> Option<f64> {
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let max = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean > 0.0).then(|| (max - mean) / mean)
}
