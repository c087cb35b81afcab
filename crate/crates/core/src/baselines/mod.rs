//! Prior-art transposition algorithms and the pieces they share: the output
//! contract, the block-parallel prefix sum, and the neighbor-list sort pass.

mod atomic;
mod mergetrans;
mod scantrans;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CsrGraph, VertexId};
use crate::par;
use crate::potra::PotraDetails;

pub use atomic::transpose_atomic;
pub use mergetrans::{default_subgraph_edges, transpose_mergetrans};
pub use scantrans::{scantrans_footprint, transpose_scantrans};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Atomic,
    ScanTrans,
    MergeTrans,
    Potra,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Atomic, Algorithm::ScanTrans, Algorithm::MergeTrans, Algorithm::Potra];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Atomic => "atomic",
            Algorithm::ScanTrans => "scantrans",
            Algorithm::MergeTrans => "mergetrans",
            Algorithm::Potra => "potra",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "atomic" => Ok(Algorithm::Atomic),
            "scantrans" => Ok(Algorithm::ScanTrans),
            "mergetrans" => Ok(Algorithm::MergeTrans),
            "potra" => Ok(Algorithm::Potra),
            _ => Err(format!("unknown algorithm {s:?} (expected atomic, scantrans, mergetrans or potra)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum TransposeError {
    #[error("counter overflow: a transposed degree reached 2^32 (counted {counted} of {expected} edges)")]
    CounterOverflow { counted: u64, expected: u64 },
    #[error("footprint exceeds limit: need {required} bytes of auxiliary memory, limit is {limit}")]
    FootprintExceedsLimit { required: u64, limit: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Wall-clock seconds per phase. Step 0 is PoTra's preprocessing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub step0: Option<f64>,
    pub step1: f64,
    pub step2: f64,
    pub step3: f64,
    pub sort: Option<f64>,
}

impl PhaseTimes {
    pub fn total(&self) -> f64 {
        self.step0.unwrap_or(0.0) + self.step1 + self.step2 + self.step3 + self.sort.unwrap_or(0.0)
    }
}

#[derive(Clone, Debug)]
pub struct TransposeOutput<I: VertexId = u32> {
    pub graph: CsrGraph<I>,
    pub phase_times: PhaseTimes,
    /// Peak bytes allocated beyond the input and output arrays.
    pub aux_footprint_bytes: u64,
    pub method: Algorithm,
    /// Whether every neighbor list is guaranteed ascending.
    pub sorted: bool,
    pub potra: Option<PotraDetails>,
}

pub(crate) struct Stopwatch(Instant);

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Self(Instant::now())
    }

    /// Seconds since the last lap.
    pub(crate) fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let s = (now - self.0).as_secs_f64();
        self.0 = now;
        s
    }
}

pub(crate) fn atomic_u32_zeroed(n: usize) -> Vec<AtomicU32> {
    (0..n).map(|_| AtomicU32::new(0)).collect()
}

/// Exclusive prefix sum of `counts` (length `counts.len() + 1`, last element
/// the total), computed block-wise on `threads` threads.
pub fn prefix_sum_parallel(counts: &[u64], threads: usize) -> Vec<u64> {
    offsets_from_counts(counts.len(), threads, |i| counts[i])
}

/// Builds an offsets array from per-vertex counts produced by `count`.
pub(crate) fn offsets_from_counts<F>(n: usize, threads: usize, count: F) -> Vec<u64>
where
    F: Fn(usize) -> u64 + Sync,
{
    let mut out = vec![0u64; n + 1];
    let ranges = par::even_ranges(n, threads);
    let chunks = par::split_by_ranges(&mut out[1..], &ranges);
    par::for_each_owned(chunks.into_iter().zip(ranges.iter().cloned()).collect(), |_, (chunk, range)| {
        for (slot, v) in chunk.iter_mut().zip(range) {
            *slot = count(v);
        }
    });
    par::inclusive_scan_in_place(&mut out[1..], threads);
    out
}

/// Shared insertion points initialized from `t_offsets[..n]`.
pub(crate) fn insertion_points(t_offsets: &[u64], threads: usize) -> Vec<AtomicU64> {
    let n = t_offsets.len() - 1;
    let mut ip: Vec<AtomicU64> = Vec::with_capacity(n);
    let ranges = par::even_ranges(n, threads);
    let chunks = par::split_by_ranges(&mut ip.spare_capacity_mut()[..n], &ranges);
    par::for_each_owned(chunks.into_iter().zip(ranges.iter().cloned()).collect(), |_, (chunk, range)| {
        for (slot, v) in chunk.iter_mut().zip(range) {
            slot.write(AtomicU64::new(t_offsets[v]));
        }
    });
    // SAFETY: all n slots written above.
    unsafe { ip.set_len(n) };
    ip
}

/// Sorts every neighbor list ascending, parallelized over vertices.
pub fn sort_neighbor_lists<I: VertexId>(mut t: TransposeOutput<I>, threads: usize) -> TransposeOutput<I> {
    let mut sw = Stopwatch::start();
    sort_lists_in_place(&mut t.graph, threads);
    t.phase_times.sort = Some(t.phase_times.sort.unwrap_or(0.0) + sw.lap());
    t.sorted = true;
    t
}

pub(crate) fn sort_lists_in_place<I: VertexId>(g: &mut CsrGraph<I>, threads: usize) {
    let offsets = g.offsets().to_vec();
    let vertex_ranges = par::edge_balanced_ranges(&offsets, threads);
    let edge_ranges: Vec<_> = vertex_ranges
        .iter()
        .map(|r| offsets[r.start] as usize..offsets[r.end] as usize)
        .collect();
    let chunks = par::split_by_ranges(g.edges_mut(), &edge_ranges);
    let work: Vec<_> = chunks.into_iter().zip(vertex_ranges).collect();
    par::for_each_owned(work, |_, (chunk, vr)| {
        let base = offsets[vr.start] as usize;
        for v in vr {
            chunk[offsets[v] as usize - base..offsets[v + 1] as usize - base].sort_unstable();
        }
    });
}

/// Checks the degree total after counting; 32-bit counters that wrapped
/// lose multiples of 2^32 and can never sum to |E|.
pub(crate) fn check_counted(counted: u64, expected: u64) -> Result<(), TransposeError> {
    if counted == expected {
        Ok(())
    } else {
        Err(TransposeError::CounterOverflow { counted, expected })
    }
}

pub(crate) fn load_u32(a: &AtomicU32) -> u64 {
    u64::from(a.load(Ordering::Relaxed))
}
