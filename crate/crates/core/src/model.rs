//! Per-edge random-access cost model for the atomic and hash-based (HLH)
//! counting methods, and the cache budget that sizes the HDV set.
//!
//! Both cost functions cover only the random accesses of a counting or
//! writing pass; sequential reads of the input are not modeled. The HLH hash
//! lookup is charged one cache-hit read, i.e. a collision-free probe.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::memlat::MemoryTimings;

/// Inputs to the HDV count formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HdvBudget {
    /// Cache bytes the HDV structures may occupy.
    pub cache_bytes: u64,
    /// Bytes per hash-table record.
    pub record_bytes: f64,
    /// Hash-table load factor in (0, 1].
    pub load_factor: f64,
    /// Per-thread bytes of state for each HDV.
    pub per_hdv_bytes: f64,
    pub threads: usize,
}

/// 8-byte key plus 4-byte dense index.
pub const DEFAULT_RECORD_BYTES: f64 = 12.0;
pub const DEFAULT_LOAD_FACTOR: f64 = 0.5;
/// One-byte low counter, four-byte high counter, eight-byte insertion point.
pub const DEFAULT_PER_HDV_BYTES: f64 = 13.0;

impl HdvBudget {
    pub fn new(cache_bytes: u64, threads: usize) -> Self {
        Self {
            cache_bytes,
            record_bytes: DEFAULT_RECORD_BYTES,
            load_factor: DEFAULT_LOAD_FACTOR,
            per_hdv_bytes: DEFAULT_PER_HDV_BYTES,
            threads,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.load_factor > 0.0 && self.load_factor <= 1.0) {
            return Err(format!("load factor must be in (0, 1], got {}", self.load_factor));
        }
        if !(self.record_bytes > 0.0) || !(self.per_hdv_bytes > 0.0) || self.threads == 0 {
            return Err("record bytes, per-HDV bytes and threads must be positive".into());
        }
        Ok(())
    }

    /// Bytes charged per HDV: record / load factor + per-HDV bytes x threads.
    pub fn bytes_per_hdv(&self) -> f64 {
        self.record_bytes / self.load_factor + self.per_hdv_bytes * self.threads as f64
    }
}

/// Number of HDV that fit the budget, and the bytes they occupy.
pub fn hdv_count(b: &HdvBudget) -> (u64, f64) {
    let per = b.bytes_per_hdv();
    let k = if per > 0.0 { (b.cache_bytes as f64 / per).floor().max(0.0) as u64 } else { 0 };
    (k, k as f64 * per)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInput {
    pub timings: MemoryTimings,
    /// Cache hit ratio of the atomic method's random accesses.
    pub hit_ratio: f64,
    /// Fraction of edges whose endpoint is an HDV.
    pub coverage: f64,
    pub num_edges: u64,
}

/// Random-access time per edge of the atomic method (ns).
pub fn atomic_per_edge(m: &ModelInput) -> f64 {
    let t = &m.timings;
    m.hit_ratio * (t.t_aw_h - t.t_aw_m) + t.t_aw_m
}

/// Random-access time per edge of the HLH method (ns).
pub fn hlh_per_edge(m: &ModelInput) -> f64 {
    let t = &m.timings;
    m.coverage * (t.t_w_h - t.t_aw_m) + t.t_aw_m + t.t_r_h
}

/// Where the two per-edge costs meet, as a function of the hit ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "h", rename_all = "snake_case")]
pub enum Crossover {
    /// The costs are equal at this hit ratio; HLH is faster below it.
    At(f64),
    /// The atomic method is at least as fast for every h in [0, 1].
    HlhNeverWins,
    /// HLH is faster for every h in [0, 1].
    HlhAlwaysWins,
    /// The atomic cost does not depend on h (hit and miss atomics cost the
    /// same), so there is no single crossover.
    Degenerate,
}

pub fn crossover(m: &ModelInput) -> Crossover {
    let t = &m.timings;
    let slope = t.t_aw_h - t.t_aw_m;
    if slope == 0.0 || !slope.is_finite() {
        return Crossover::Degenerate;
    }
    let h = (m.coverage * (t.t_w_h - t.t_aw_m) + t.t_r_h) / slope;
    if (0.0..=1.0).contains(&h) {
        return Crossover::At(h);
    }
    // outside [0, 1] one method wins everywhere; check at the midpoint
    let probe = ModelInput { hit_ratio: 0.5, ..m.clone() };
    if hlh_per_edge(&probe) < atomic_per_edge(&probe) {
        Crossover::HlhAlwaysWins
    } else {
        Crossover::HlhNeverWins
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub series: String,
    pub hit_ratio: f64,
    pub coverage: Option<f64>,
    pub ns_per_edge: f64,
}

/// Atomic cost over h = 0, 0.01, ..., 1 and one flat HLH line per coverage.
pub fn plot_model(timings: &MemoryTimings, coverages: &[f64]) -> Vec<ModelRow> {
    let mut rows = Vec::with_capacity(101 * (1 + coverages.len()));
    for i in 0..=100 {
        let h = i as f64 / 100.0;
        let base = ModelInput {
            timings: timings.clone(),
            hit_ratio: h,
            coverage: 0.0,
            num_edges: 0,
        };
        rows.push(ModelRow {
            series: "atomic".into(),
            hit_ratio: h,
            coverage: None,
            ns_per_edge: atomic_per_edge(&base),
        });
        for &c in coverages {
            rows.push(ModelRow {
                series: "hlh".into(),
                hit_ratio: h,
                coverage: Some(c),
                ns_per_edge: hlh_per_edge(&ModelInput { coverage: c, ..base.clone() }),
            });
        }
    }
    rows
}

pub fn write_model_csv<W: Write>(rows: &[ModelRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(t: MemoryTimings, h: f64, c: f64) -> ModelInput {
        ModelInput { timings: t, hit_ratio: h, coverage: c, num_edges: 1000 }
    }

    fn rel_eq(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn hdv_count_examples() {
        let b = HdvBudget { cache_bytes: 1000, record_bytes: 8.0, load_factor: 0.5, per_hdv_bytes: 1.0, threads: 16 };
        assert_eq!(hdv_count(&b).0, 31);
        let b = HdvBudget { cache_bytes: 1000, record_bytes: 1.0, load_factor: 1.0, per_hdv_bytes: 1.0, threads: 1 };
        assert_eq!(hdv_count(&b).0, 500);
        let b = HdvBudget { cache_bytes: 128 << 20, record_bytes: 12.0, load_factor: 0.5, per_hdv_bytes: 8.0, threads: 128 };
        // 134217728 / (24 + 1024) = 128070.35
        assert_eq!(hdv_count(&b).0, 128_070);
        let (k, bytes) = hdv_count(&b);
        assert!(bytes <= b.cache_bytes as f64);
        assert_eq!(bytes, k as f64 * 1048.0);
    }

    #[test]
    fn zero_budget_gives_zero() {
        assert_eq!(hdv_count(&HdvBudget::new(0, 8)).0, 0);
    }

    #[test]
    fn atomic_boundaries() {
        let t = MemoryTimings::from_values(1.0, 1.0, 0.3, 5.0, 5.0, 0.54);
        assert_eq!(atomic_per_edge(&input(t.clone(), 1.0, 0.0)), 0.3);
        assert_eq!(atomic_per_edge(&input(t.clone(), 0.0, 0.0)), 0.54);
        assert!(rel_eq(atomic_per_edge(&input(t, 0.5, 0.0)), (0.3 + 0.54) / 2.0));
    }

    #[test]
    fn hlh_boundaries_and_reported_values() {
        let t = MemoryTimings::from_values(0.7, 0.6, 1.0, 5.0, 5.0, 1.6);
        assert!(rel_eq(hlh_per_edge(&input(t.clone(), 0.0, 0.0)), 1.6 + 0.7));
        assert!(rel_eq(hlh_per_edge(&input(t.clone(), 0.0, 1.0)), 0.6 + 0.7));
        assert!(rel_eq(hlh_per_edge(&input(t, 0.0, 0.5)), 1.1 + 0.7));
    }

    #[test]
    fn crossover_examples() {
        let t = MemoryTimings::from_values(1.0, 1.0, 1.0, 5.0, 5.0, 5.0);
        let m = input(t, 0.0, 0.5);
        assert_eq!(crossover(&m), Crossover::At(0.25));
        let Crossover::At(h) = crossover(&m) else { unreachable!() };
        let at = ModelInput { hit_ratio: h, ..m };
        assert!((atomic_per_edge(&at) - hlh_per_edge(&at)).abs() < 1e-9);

        let zero = MemoryTimings::from_values(0.0, 2.0, 1.0, 5.0, 5.0, 5.0);
        assert_eq!(crossover(&input(zero, 0.0, 0.0)), Crossover::At(0.0));

        let flat = MemoryTimings::from_values(1.0, 1.0, 2.0, 5.0, 5.0, 2.0);
        assert_eq!(crossover(&input(flat, 0.0, 0.5)), Crossover::Degenerate);
    }

    #[test]
    fn crossover_outside_unit_interval() {
        // hash reads so slow that HLH never catches up
        let slow = MemoryTimings::from_values(100.0, 1.0, 1.0, 5.0, 5.0, 5.0);
        assert_eq!(crossover(&input(slow, 0.0, 0.2)), Crossover::HlhNeverWins);
        // HLH cheaper even at h = 1: free reads and writes far below t_aw_h
        let fast = MemoryTimings::from_values(0.0, 0.1, 4.0, 5.0, 5.0, 5.0);
        assert_eq!(crossover(&input(fast, 0.0, 1.0)), Crossover::HlhAlwaysWins);
    }

    #[test]
    fn plot_layout() {
        let t = MemoryTimings::from_values(1.0, 1.0, 1.0, 5.0, 5.0, 5.0);
        let rows = plot_model(&t, &[0.2, 0.5]);
        assert_eq!(rows.len(), 101 * 3);
        assert_eq!(rows.iter().filter(|r| r.hit_ratio == 0.5 && r.series == "hlh").count(), 2);
        assert_eq!(plot_model(&t, &[]).len(), 101);
        let flat = MemoryTimings::from_values(2.0, 2.0, 2.0, 2.0, 2.0, 2.0);
        assert!(plot_model(&flat, &[]).iter().all(|r| r.ns_per_edge == 2.0));
    }
}
