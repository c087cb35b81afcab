use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::graph::{transpose_oracle, CsrGraph, VertexId};
use crate::memlat::Xoshiro256StarStar;

/// Graphs up to this many edges are checked against the full oracle in
/// automatic mode.
pub const FULL_ORACLE_MAX_EDGES: usize = 100_000_000;
pub const SAMPLED_VERTICES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMode {
    FullOracle,
    MultisetSample,
    Auto,
}

impl VerifyMode {
    pub fn resolve(self, num_edges: usize) -> VerifyMode {
        match self {
            VerifyMode::Auto if num_edges <= FULL_ORACLE_MAX_EDGES => VerifyMode::FullOracle,
            VerifyMode::Auto => VerifyMode::MultisetSample,
            m => m,
        }
    }
}

impl fmt::Display for VerifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyMode::FullOracle => "full-oracle",
            VerifyMode::MultisetSample => "multiset-sample",
            VerifyMode::Auto => "auto",
        })
    }
}

impl FromStr for VerifyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full-oracle" | "full" => Ok(VerifyMode::FullOracle),
            "multiset-sample" | "sample" => Ok(VerifyMode::MultisetSample),
            "auto" => Ok(VerifyMode::Auto),
            _ => Err(format!("unknown verify mode {s:?} (expected full-oracle, multiset-sample or auto)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub mode: VerifyMode,
    /// First vertex of the output whose list (or degree) is wrong.
    pub first_bad_vertex: Option<u64>,
    pub detail: String,
}

impl VerifyReport {
    fn pass(mode: VerifyMode) -> Self {
        Self { passed: true, mode, first_bad_vertex: None, detail: "ok".into() }
    }

    fn fail(mode: VerifyMode, vertex: Option<u64>, detail: String) -> Self {
        Self { passed: false, mode, first_bad_vertex: vertex, detail }
    }
}

/// Checks that `output` is the transpose of `input`. Neighbor-list order is
/// ignored.
pub fn verify_output<I: VertexId>(input: &CsrGraph<I>, output: &CsrGraph<I>, mode: VerifyMode, seed: u64) -> VerifyReport {
    let mode = mode.resolve(input.num_edges());
    if output.orientation() != input.orientation().flipped() {
        return VerifyReport::fail(mode, None, format!("orientation is {}, expected {}", output.orientation(), input.orientation().flipped()));
    }
    if output.num_vertices() != input.num_vertices() || output.num_edges() != input.num_edges() {
        return VerifyReport::fail(
            mode,
            None,
            format!(
                "size |V|={} |E|={}, expected |V|={} |E|={}",
                output.num_vertices(),
                output.num_edges(),
                input.num_vertices(),
                input.num_edges()
            ),
        );
    }
    match mode {
        VerifyMode::FullOracle | VerifyMode::Auto => full(input, output),
        VerifyMode::MultisetSample => sampled(input, output, seed),
    }
}

fn full<I: VertexId>(input: &CsrGraph<I>, output: &CsrGraph<I>) -> VerifyReport {
    let mode = VerifyMode::FullOracle;
    let oracle = transpose_oracle(input);
    for v in 0..oracle.num_vertices() {
        let want = oracle.neighbors(v);
        let got = output.neighbors(v);
        if want.len() != got.len() {
            return VerifyReport::fail(mode, Some(v as u64), format!("vertex {v}: degree {}, expected {}", got.len(), want.len()));
        }
        if output.edge_range(v) != oracle.edge_range(v) {
            return VerifyReport::fail(mode, Some(v as u64), format!("vertex {v}: list starts at {}, expected {}", output.edge_range(v).start, oracle.edge_range(v).start));
        }
        let mut got = got.to_vec();
        got.sort_unstable();
        if got != want {
            return VerifyReport::fail(mode, Some(v as u64), format!("vertex {v}: neighbor multiset differs"));
        }
    }
    VerifyReport::pass(mode)
}

fn sampled<I: VertexId>(input: &CsrGraph<I>, output: &CsrGraph<I>, seed: u64) -> VerifyReport {
    let mode = VerifyMode::MultisetSample;
    let n = input.num_vertices();
    let mut degree = vec![0u64; n];
    for e in input.edges() {
        degree[e.index()] += 1;
    }
    let mut acc = 0u64;
    for (v, d) in degree.iter().enumerate() {
        if output.offsets()[v] != acc {
            return VerifyReport::fail(mode, Some(v as u64), format!("vertex {v}: offset {}, expected {acc}", output.offsets()[v]));
        }
        acc += d;
    }
    drop(degree);

    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut chosen: Vec<usize> = if n <= SAMPLED_VERTICES {
        (0..n).collect()
    } else {
        (0..SAMPLED_VERTICES).map(|_| rng.next_below(n as u64) as usize).collect()
    };
    chosen.sort_unstable();
    chosen.dedup();
    let slot: HashMap<usize, usize> = chosen.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut expected: Vec<Vec<I>> = vec![Vec::new(); chosen.len()];
    for v in 0..n {
        for e in input.neighbors(v) {
            if let Some(&i) = slot.get(&e.index()) {
                expected[i].push(I::from_index(v));
            }
        }
    }
    for (i, &u) in chosen.iter().enumerate() {
        let mut got = output.neighbors(u).to_vec();
        got.sort_unstable();
        if got != expected[i] {
            return VerifyReport::fail(mode, Some(u as u64), format!("vertex {u}: neighbor multiset differs"));
        }
    }
    VerifyReport::pass(mode)
}
