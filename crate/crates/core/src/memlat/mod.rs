//! Random-access rate microbenchmark.
//!
//! Parallel threads issue random reads, writes, or atomic increments into one
//! shared array. With the array sized to the total L3 the accesses mostly
//! hit; at 1000x that size they mostly miss. The six resulting per-access
//! times feed the per-edge cost model in [`crate::model`].

mod xoshiro;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Barrier, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sysinfo;

pub use xoshiro::{splitmix64, Xoshiro256StarStar};

#[derive(Debug, Error)]
pub enum MemlatError {
    #[error("empty measurement: iterations must be > 0")]
    EmptyMeasurement,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("could not allocate {0} bytes for the measurement array")]
    Allocation(u64),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("rates file is missing the {kind}/{regime} cell")]
    MissingCell { kind: AccessKind, regime: Regime },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessKind {
    Read,
    Write,
    /// Read-modify-write increment of the addressed word.
    AtomicWrite,
}

impl AccessKind {
    pub const ALL: [AccessKind; 3] = [AccessKind::Read, AccessKind::Write, AccessKind::AtomicWrite];
}

impl fmt::Display for AccessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccessKind::Read => "read",
            AccessKind::Write => "write",
            AccessKind::AtomicWrite => "atomic_write",
        })
    }
}

impl FromStr for AccessKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "read" => Ok(AccessKind::Read),
            "write" => Ok(AccessKind::Write),
            "atomic_write" => Ok(AccessKind::AtomicWrite),
            _ => Err(format!("unknown access kind {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Hit,
    Miss,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Hit => "hit",
            Regime::Miss => "miss",
        })
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hit" => Ok(Regime::Hit),
            "miss" => Ok(Regime::Miss),
            _ => Err(format!("unknown regime {s:?}")),
        }
    }
}

/// Per-access times in nanoseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryTimings {
    pub t_r_h: f64,
    pub t_w_h: f64,
    pub t_aw_h: f64,
    pub t_r_m: f64,
    pub t_w_m: f64,
    pub t_aw_m: f64,
    pub threads: usize,
    pub hit_array_bytes: u64,
    pub miss_array_bytes: u64,
    /// Accesses per thread in each timed loop.
    pub iterations: u64,
    /// Untimed random accesses per thread before each timed loop.
    pub warmup_iterations: u64,
    /// True when the miss array ended up below 100x the hit array.
    pub miss_array_undersized: bool,
}

impl MemoryTimings {
    /// Timings with explicit values and no measurement metadata.
    pub fn from_values(t_r_h: f64, t_w_h: f64, t_aw_h: f64, t_r_m: f64, t_w_m: f64, t_aw_m: f64) -> Self {
        Self {
            t_r_h,
            t_w_h,
            t_aw_h,
            t_r_m,
            t_w_m,
            t_aw_m,
            threads: 0,
            hit_array_bytes: 0,
            miss_array_bytes: 0,
            iterations: 0,
            warmup_iterations: 0,
            miss_array_undersized: false,
        }
    }

    pub fn get(&self, kind: AccessKind, regime: Regime) -> f64 {
        match (kind, regime) {
            (AccessKind::Read, Regime::Hit) => self.t_r_h,
            (AccessKind::Write, Regime::Hit) => self.t_w_h,
            (AccessKind::AtomicWrite, Regime::Hit) => self.t_aw_h,
            (AccessKind::Read, Regime::Miss) => self.t_r_m,
            (AccessKind::Write, Regime::Miss) => self.t_w_m,
            (AccessKind::AtomicWrite, Regime::Miss) => self.t_aw_m,
        }
    }

    fn set(&mut self, kind: AccessKind, regime: Regime, v: f64) {
        *match (kind, regime) {
            (AccessKind::Read, Regime::Hit) => &mut self.t_r_h,
            (AccessKind::Write, Regime::Hit) => &mut self.t_w_h,
            (AccessKind::AtomicWrite, Regime::Hit) => &mut self.t_aw_h,
            (AccessKind::Read, Regime::Miss) => &mut self.t_r_m,
            (AccessKind::Write, Regime::Miss) => &mut self.t_w_m,
            (AccessKind::AtomicWrite, Regime::Miss) => &mut self.t_aw_m,
        } = v;
    }

    /// Kinds whose miss time is below `(1 - slack)` times the hit time.
    pub fn monotonicity_violations(&self, slack: f64) -> Vec<AccessKind> {
        AccessKind::ALL
            .into_iter()
            .filter(|&k| self.get(k, Regime::Miss) < (1.0 - slack) * self.get(k, Regime::Hit))
            .collect()
    }

    /// Reads a rates CSV written by [`write_rates_csv`].
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, MemlatError> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let mut t = MemoryTimings::from_values(f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN);
        for row in rdr.deserialize::<RateRow>() {
            let row = row?;
            t.set(row.kind, row.regime, row.ns_per_access);
        }
        for kind in AccessKind::ALL {
            for regime in [Regime::Hit, Regime::Miss] {
                if !t.get(kind, regime).is_finite() {
                    return Err(MemlatError::MissingCell { kind, regime });
                }
            }
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub kind: AccessKind,
    pub regime: Regime,
    pub ns_per_access: f64,
    pub normalized_rate: f64,
}

/// Access rates (1/time) normalized to the hit-regime read rate.
pub fn report_rates(t: &MemoryTimings) -> Vec<RateRow> {
    let mut rows = Vec::with_capacity(6);
    for regime in [Regime::Hit, Regime::Miss] {
        for kind in AccessKind::ALL {
            let ns = t.get(kind, regime);
            rows.push(RateRow {
                kind,
                regime,
                ns_per_access: ns,
                normalized_rate: t.t_r_h / ns,
            });
        }
    }
    rows
}

/// Writes the rate table as CSV, preceded by `#` metadata lines.
pub fn write_rates_csv<W: Write>(t: &MemoryTimings, mut out: W) -> Result<(), MemlatError> {
    writeln!(out, "# threads={}", t.threads)?;
    writeln!(out, "# hit_array_bytes={}", t.hit_array_bytes)?;
    writeln!(out, "# miss_array_bytes={}", t.miss_array_bytes)?;
    writeln!(out, "# miss_array_undersized={}", t.miss_array_undersized)?;
    writeln!(out, "# iterations_per_thread={}", t.iterations)?;
    writeln!(out, "# warmup_iterations_per_thread={}", t.warmup_iterations)?;
    let mut w = csv::Writer::from_writer(out);
    for row in report_rates(t) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct MeasureConfig {
    pub threads: usize,
    /// Total L3 bytes; the hit-regime array size.
    pub l3_bytes: u64,
    /// Accesses per thread per cell.
    pub iterations: u64,
    pub seed: u64,
    /// Cap on the miss-regime array.
    pub max_miss_bytes: u64,
}

pub const DEFAULT_MAX_MISS_BYTES: u64 = 64 << 30;

impl MeasureConfig {
    pub fn new(threads: usize, l3_bytes: u64, iterations: u64, seed: u64) -> Self {
        Self {
            threads,
            l3_bytes,
            iterations,
            seed,
            max_miss_bytes: DEFAULT_MAX_MISS_BYTES,
        }
    }
}

/// Measures all six (kind x regime) cells.
pub fn measure_timings(cfg: &MeasureConfig) -> Result<MemoryTimings, MemlatError> {
    if cfg.iterations == 0 {
        return Err(MemlatError::EmptyMeasurement);
    }
    if cfg.threads == 0 {
        return Err(MemlatError::InvalidConfig("threads must be >= 1".into()));
    }
    if cfg.l3_bytes < 8 {
        return Err(MemlatError::InvalidConfig("L3 size must be at least one word".into()));
    }
    let warmup = cfg.iterations.min(cfg.l3_bytes / 8);
    let mut timings = MemoryTimings::from_values(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    timings.threads = cfg.threads;
    timings.iterations = cfg.iterations;
    timings.warmup_iterations = warmup;

    let hit = allocate_words(cfg.l3_bytes / 8, cfg.threads)?;
    timings.hit_array_bytes = hit.len() as u64 * 8;
    for kind in AccessKind::ALL {
        let ns = time_accesses(&hit, kind, cfg.threads, cfg.iterations, warmup, cfg.seed);
        timings.set(kind, Regime::Hit, ns);
    }
    drop(hit);

    let requested = cfg.l3_bytes.saturating_mul(1000).min(cfg.max_miss_bytes).max(cfg.l3_bytes);
    let miss = allocate_largest(requested / 8, cfg.threads)?;
    timings.miss_array_bytes = miss.len() as u64 * 8;
    timings.miss_array_undersized = timings.miss_array_bytes < cfg.l3_bytes.saturating_mul(100);
    if timings.miss_array_bytes < requested {
        log::warn!(
            "miss-regime array reduced from {requested} to {} bytes (memory limit)",
            timings.miss_array_bytes
        );
    }
    for kind in AccessKind::ALL {
        let ns = time_accesses(&miss, kind, cfg.threads, cfg.iterations, warmup, cfg.seed);
        timings.set(kind, Regime::Miss, ns);
    }
    Ok(timings)
}

fn allocate_largest(words: u64, threads: usize) -> Result<Vec<AtomicU64>, MemlatError> {
    // overcommit makes try_reserve succeed for sizes that would later be
    // killed on first touch, so stay below the available memory as well
    let budget = sysinfo::available_memory_bytes().map_or(u64::MAX, |b| b / 10 * 8) / 8;
    let mut words = words.min(budget).max(1);
    loop {
        match allocate_words(words, threads) {
            Ok(v) => return Ok(v),
            Err(_) if words > 1 << 20 => words /= 2,
            Err(e) => return Err(e),
        }
    }
}

/// Zeroed array of `words` atomics, first-touched in parallel so page faults
/// stay out of the timed loops.
pub fn allocate_words(words: u64, threads: usize) -> Result<Vec<AtomicU64>, MemlatError> {
    let n = usize::try_from(words).map_err(|_| MemlatError::Allocation(words * 8))?;
    let mut v: Vec<AtomicU64> = Vec::new();
    v.try_reserve_exact(n).map_err(|_| MemlatError::Allocation(words * 8))?;
    let ranges = crate::par::even_ranges(n, threads);
    let spare = &mut v.spare_capacity_mut()[..n];
    let chunks = crate::par::split_by_ranges(spare, &ranges);
    crate::par::for_each_owned(chunks, |_, chunk| {
        for slot in chunk {
            slot.write(AtomicU64::new(0));
        }
    });
    // SAFETY: every slot in 0..n was initialized above.
    unsafe { v.set_len(n) };
    Ok(v)
}

/// Runs `iterations` random accesses of `kind` per thread into `array` and
/// returns the wall-clock time per access across all threads.
pub fn time_accesses(array: &[AtomicU64], kind: AccessKind, threads: usize, iterations: u64, warmup: u64, seed: u64) -> f64 {
    let threads = threads.max(1);
    let n = array.len() as u64;
    let barrier = Barrier::new(threads);
    let window: Mutex<Option<(Instant, Instant)>> = Mutex::new(None);
    crate::par::map_threads(threads, |tid| {
        let mut rng = Xoshiro256StarStar::stream(seed, tid as u64);
        let mut sink = 0u64;
        sink = sink.wrapping_add(run(array, kind, &mut rng, n, warmup));
        barrier.wait();
        let start = Instant::now();
        sink = sink.wrapping_add(run(array, kind, &mut rng, n, iterations));
        barrier.wait();
        let end = Instant::now();
        std::hint::black_box(sink);
        let mut w = window.lock().unwrap();
        let (s, e) = w.get_or_insert((start, end));
        *s = (*s).min(start);
        *e = (*e).max(end);
    });
    let (start, end) = window.into_inner().unwrap().expect("at least one thread ran");
    (end - start).as_nanos() as f64 / (threads as u64 * iterations) as f64
}

#[inline(never)]
fn run(array: &[AtomicU64], kind: AccessKind, rng: &mut Xoshiro256StarStar, n: u64, count: u64) -> u64 {
    let mut acc = 0u64;
    match kind {
        AccessKind::Read => {
            for _ in 0..count {
                let i = rng.next_below(n) as usize;
                acc = acc.wrapping_add(array[i].load(Ordering::Relaxed));
            }
        }
        AccessKind::Write => {
            for c in 0..count {
                let i = rng.next_below(n) as usize;
                array[i].store(c | 1, Ordering::Relaxed);
            }
        }
        AccessKind::AtomicWrite => {
            for _ in 0..count {
                let i = rng.next_below(n) as usize;
                array[i].fetch_add(1, Ordering::Relaxed);
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(ns: f64) -> MemoryTimings {
        MemoryTimings::from_values(ns, ns, ns, ns, ns, ns)
    }

    #[test]
    fn read_hit_normalizes_to_one() {
        let t = MemoryTimings::from_values(2.0, 1.0, 3.0, 10.0, 11.0, 12.0);
        let rows = report_rates(&t);
        let cell = |k, r| rows.iter().find(|row| row.kind == k && row.regime == r).unwrap().normalized_rate;
        assert_eq!(cell(AccessKind::Read, Regime::Hit), 1.0);
        // write twice as fast as read -> rate 2.0, so t_w_h = t_r_h / 2
        assert_eq!(cell(AccessKind::Write, Regime::Hit), 2.0);
        assert!(report_rates(&flat(4.0)).iter().all(|r| r.normalized_rate == 1.0));
    }

    #[test]
    fn half_rate_when_twice_as_slow() {
        let t = MemoryTimings::from_values(1.0, 2.0, 1.0, 1.0, 1.0, 1.0);
        let row = report_rates(&t).into_iter().find(|r| r.kind == AccessKind::Write && r.regime == Regime::Hit).unwrap();
        assert_eq!(row.normalized_rate, 0.5);
    }

    #[test]
    fn zero_iterations_rejected() {
        let err = measure_timings(&MeasureConfig::new(1, 1 << 20, 0, 1)).unwrap_err();
        assert!(matches!(err, MemlatError::EmptyMeasurement));
        assert_eq!(err.to_string(), "empty measurement: iterations must be > 0");
    }

    #[test]
    fn csv_round_trip() {
        let t = MemoryTimings::from_values(1.5, 1.25, 2.0, 8.0, 9.0, 10.0);
        let mut buf = Vec::new();
        write_rates_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("kind,regime,ns_per_access,normalized_rate"));
        let back = MemoryTimings::from_csv(&buf[..]).unwrap();
        for k in AccessKind::ALL {
            for r in [Regime::Hit, Regime::Miss] {
                assert_eq!(back.get(k, r), t.get(k, r));
            }
        }
    }

    #[test]
    fn missing_cell_reported() {
        let csv = "kind,regime,ns_per_access,normalized_rate\nread,hit,1.0,1.0\n";
        assert!(matches!(MemoryTimings::from_csv(csv.as_bytes()), Err(MemlatError::MissingCell { .. })));
    }

    #[test]
    fn write_kinds_touch_the_array() {
        let arr = allocate_words(1 << 12, 2).unwrap();
        time_accesses(&arr, AccessKind::AtomicWrite, 2, 1000, 100, 3);
        let total: u64 = arr.iter().map(|a| a.load(Ordering::Relaxed)).sum();
        assert_eq!(total, 2 * (1000 + 100));

        let arr = allocate_words(1 << 12, 2).unwrap();
        time_accesses(&arr, AccessKind::Write, 2, 1000, 0, 3);
        assert!(arr.iter().any(|a| a.load(Ordering::Relaxed) != 0));

        let arr = allocate_words(1 << 12, 2).unwrap();
        let ns = time_accesses(&arr, AccessKind::Read, 2, 1000, 0, 3);
        assert!(ns > 0.0);
        assert!(arr.iter().all(|a| a.load(Ordering::Relaxed) == 0));
    }

    #[test]
    fn small_measurement_produces_positive_times() {
        let mut cfg = MeasureConfig::new(2, 1 << 16, 20_000, 5);
        cfg.max_miss_bytes = 1 << 24;
        let t = measure_timings(&cfg).unwrap();
        for k in AccessKind::ALL {
            assert!(t.get(k, Regime::Hit) > 0.0);
            assert!(t.get(k, Regime::Miss) > 0.0);
        }
        assert_eq!(t.hit_array_bytes, 1 << 16);
        assert_eq!(t.miss_array_bytes, 1 << 24);
        assert!(!t.miss_array_undersized);
    }
}
