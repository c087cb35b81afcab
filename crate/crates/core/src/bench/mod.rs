//! Benchmark driver: dataset representations, algorithm dispatch, repeated
//! timed runs with verification, and CSV/JSON reporting.

mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::Serialize;

use crate::baselines::{
    default_subgraph_edges, sort_neighbor_lists, transpose_atomic, transpose_mergetrans, transpose_scantrans,
    Algorithm, PhaseTimes, TransposeError, TransposeOutput,
};
use crate::graph::{relabel, relabel_random, store_graph, transpose_oracle, AnyGraph, CsrGraph, GraphError, Orientation, VertexId};
use crate::model::HdvBudget;
use crate::potra::{transpose_potra, Method, PotraOptions};
use crate::sysinfo;

pub use verify::{verify_output, VerifyMode, VerifyReport, FULL_ORACLE_MAX_EDGES, SAMPLED_VERTICES};

pub const SCHEMA_VERSION: u32 = 1;
pub const OOM_PRECHECK: &str = "OOM-precheck";

/// Knobs shared by every algorithm run.
#[derive(Clone, Debug)]
pub struct TransposeConfig {
    /// ScanTrans refuses to run above this many auxiliary bytes.
    pub footprint_limit: Option<u64>,
    /// MergeTrans subgraph size in edges.
    pub subgraph_edges: Option<usize>,
    /// PoTra's HDV cache budget; threads are filled in per run.
    pub budget: HdvBudget,
    pub potra: PotraOptions,
}

impl Default for TransposeConfig {
    fn default() -> Self {
        Self {
            footprint_limit: None,
            subgraph_edges: None,
            budget: HdvBudget::new(default_cache_budget(), 1),
            potra: PotraOptions::default(),
        }
    }
}

/// Detected L2 + L3 capacity, or 32 MiB if sysfs has no cache information.
pub fn default_cache_budget() -> u64 {
    sysinfo::l2_plus_l3_bytes().unwrap_or(32 << 20)
}

pub fn run_transpose<I: VertexId>(
    g: &CsrGraph<I>,
    algo: Algorithm,
    threads: usize,
    cfg: &TransposeConfig,
) -> Result<TransposeOutput<I>, TransposeError> {
    match algo {
        Algorithm::Atomic => transpose_atomic(g, threads),
        Algorithm::ScanTrans => transpose_scantrans(g, threads, cfg.footprint_limit),
        Algorithm::MergeTrans => {
            let s = cfg.subgraph_edges.unwrap_or_else(|| default_subgraph_edges(I::BYTES as usize));
            transpose_mergetrans(g, threads, s)
        }
        Algorithm::Potra => transpose_potra(g, threads, &cfg.budget, &cfg.potra),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Representation {
    #[serde(rename = "CSR")]
    Csr,
    #[serde(rename = "CSR-Rnd")]
    CsrRnd,
    #[serde(rename = "CSC")]
    Csc,
    #[serde(rename = "CSC-Rnd")]
    CscRnd,
}

impl Representation {
    pub const ALL: [Representation; 4] =
        [Representation::Csr, Representation::CsrRnd, Representation::Csc, Representation::CscRnd];

    pub fn label(self) -> &'static str {
        match self {
            Representation::Csr => "CSR",
            Representation::CsrRnd => "CSR-Rnd",
            Representation::Csc => "CSC",
            Representation::CscRnd => "CSC-Rnd",
        }
    }

    fn of(orientation: Orientation, randomized: bool) -> Self {
        match (orientation, randomized) {
            (Orientation::Csr, false) => Representation::Csr,
            (Orientation::Csr, true) => Representation::CsrRnd,
            (Orientation::Csc, false) => Representation::Csc,
            (Orientation::Csc, true) => Representation::CscRnd,
        }
    }
}

/// The input as given, its random relabeling, its transpose, and the
/// transpose relabeled with the same permutation.
pub fn representations<I: VertexId>(g: &CsrGraph<I>, seed: u64) -> Vec<(Representation, CsrGraph<I>)> {
    let (rnd, perm) = relabel_random(g, seed);
    let t = transpose_oracle(g);
    let t_rnd = relabel(&t, &perm);
    let to = t.orientation();
    vec![
        (Representation::of(g.orientation(), false), g.clone()),
        (Representation::of(g.orientation(), true), rnd),
        (Representation::of(to, false), t),
        (Representation::of(to, true), t_rnd),
    ]
}

/// Writes the four representations as `<stem>.<label>.potg` under `dir`.
pub fn prepare_representations<I: VertexId>(
    g: &CsrGraph<I>,
    seed: u64,
    dir: &Path,
    stem: &str,
) -> Result<Vec<(Representation, PathBuf)>, GraphError> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for (r, graph) in representations(g, seed) {
        let path = dir.join(format!("{stem}.{}.potg", r.label()));
        store_graph(&graph, &path)?;
        out.push((r, path));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub representation: String,
    pub graph: AnyGraph,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub algorithms: Vec<Algorithm>,
    pub threads: Vec<usize>,
    pub repetitions: usize,
    /// `None` skips verification.
    pub verify: Option<VerifyMode>,
    /// Run the sort pass on unsorted outputs and include it in the total.
    pub sort_output: bool,
    pub transpose: TransposeConfig,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            threads: vec![sysinfo::hardware_threads()],
            repetitions: 3,
            verify: Some(VerifyMode::Auto),
            sort_output: false,
            transpose: TransposeConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub dataset: String,
    pub representation: String,
    pub algo: Algorithm,
    pub threads: usize,
    pub repetitions: usize,
    pub num_vertices: u64,
    pub num_edges: u64,
    pub graph_bytes: u64,
    /// "ok", "OOM-precheck", or "error: ..." for a failed cell.
    pub status: String,
    pub phase_times: Option<PhaseTimes>,
    /// Median total seconds over the repetitions.
    pub total_time: Option<f64>,
    pub sort_time: Option<f64>,
    pub aux_footprint_bytes: Option<u64>,
    pub sorted: Option<bool>,
    pub method_chosen: Option<Method>,
    pub k: Option<usize>,
    pub coverage_estimate: Option<f64>,
    pub coverage_exact: Option<f64>,
    pub step3_imbalance: Option<f64>,
    pub speedup_vs_atomic: Option<f64>,
    pub verification: Option<VerifyReport>,
}

impl RunReport {
    /// A report with the configuration filled in and no results yet.
    pub fn new(name: &str, representation: &str, algo: Algorithm, threads: usize, reps: usize, g: &AnyGraph) -> Self {
        let graph_bytes = crate::with_graph!(g, g => g.size_bytes());
        Self {
            schema_version: SCHEMA_VERSION,
            dataset: name.into(),
            representation: representation.into(),
            algo,
            threads,
            repetitions: reps,
            num_vertices: g.num_vertices() as u64,
            num_edges: g.num_edges() as u64,
            graph_bytes,
            status: "ok".into(),
            phase_times: None,
            total_time: None,
            sort_time: None,
            aux_footprint_bytes: None,
            sorted: None,
            method_chosen: None,
            k: None,
            coverage_estimate: None,
            coverage_exact: None,
            step3_imbalance: None,
            speedup_vs_atomic: None,
            verification: None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.status == "ok"
    }
}

/// One timed run: the output and its total wall time in seconds.
pub fn timed_run<I: VertexId>(
    g: &CsrGraph<I>,
    algo: Algorithm,
    threads: usize,
    cfg: &TransposeConfig,
    sort_output: bool,
) -> Result<(TransposeOutput<I>, f64), TransposeError> {
    let start = Instant::now();
    let mut out = run_transpose(g, algo, threads, cfg)?;
    if sort_output && !out.sorted {
        out = sort_neighbor_lists(out, threads);
    }
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Fills the per-run fields of a report from one output.
pub fn describe_output<I: VertexId>(report: &mut RunReport, out: &TransposeOutput<I>, total: f64) {
    report.phase_times = Some(out.phase_times.clone());
    report.total_time = Some(total);
    report.sort_time = out.phase_times.sort;
    report.aux_footprint_bytes = Some(out.aux_footprint_bytes);
    report.sorted = Some(out.sorted);
    if let Some(d) = &out.potra {
        report.method_chosen = Some(d.method);
        report.k = Some(d.k);
        report.coverage_estimate = Some(d.coverage_estimate);
        report.coverage_exact = d.coverage_exact;
        report.step3_imbalance = d.step3_imbalance;
    }
}

fn status_of(e: &TransposeError) -> String {
    match e {
        TransposeError::FootprintExceedsLimit { .. } => OOM_PRECHECK.into(),
        other => format!("error: {other}"),
    }
}

fn run_cell<I: VertexId>(g: &CsrGraph<I>, algo: Algorithm, threads: usize, cfg: &BenchConfig, report: &mut RunReport) {
    let reps = cfg.repetitions.max(1);
    let mut samples: Vec<(f64, RunReport)> = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        // free the previous output before timing the next run
        drop(last.take());
        match timed_run(g, algo, threads, &cfg.transpose, cfg.sort_output) {
            Ok((out, total)) => {
                let mut r = report.clone();
                describe_output(&mut r, &out, total);
                samples.push((total, r));
                last = Some(out.graph);
            }
            Err(e) => {
                report.status = status_of(&e);
                return;
            }
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let totals: Vec<f64> = samples.iter().map(|s| s.0).collect();
    *report = samples.swap_remove((samples.len() - 1) / 2).1;
    info!("{} {} {algo} t={threads}: median {:.4}s of {:?}", report.dataset, report.representation, report.total_time.unwrap_or(0.0), totals);
    if let (Some(mode), Some(out)) = (cfg.verify, last) {
        let v = verify_output(g, &out, mode, cfg.seed);
        if !v.passed {
            report.status = format!("error: verification failed: {}", v.detail);
        }
        report.verification = Some(v);
    }
}

/// Runs every dataset x algorithm x thread-count cell serially.
pub fn run_benchmark(datasets: &[Dataset], cfg: &BenchConfig) -> Vec<RunReport> {
    let mut reports = Vec::new();
    for d in datasets {
        for &threads in &cfg.threads {
            for &algo in &cfg.algorithms {
                let mut r = RunReport::new(&d.name, &d.representation, algo, threads, cfg.repetitions.max(1), &d.graph);
                crate::with_graph!(&d.graph, g => run_cell(g, algo, threads, cfg, &mut r));
                reports.push(r);
            }
        }
    }
    fill_speedups(&mut reports);
    reports
}

/// Speedup = atomic total / cell total, within the same dataset,
/// representation and thread count.
pub fn fill_speedups(reports: &mut [RunReport]) {
    let baselines: Vec<(String, String, usize, f64)> = reports
        .iter()
        .filter(|r| r.algo == Algorithm::Atomic && r.succeeded())
        .filter_map(|r| r.total_time.map(|t| (r.dataset.clone(), r.representation.clone(), r.threads, t)))
        .collect();
    for r in reports.iter_mut() {
        let base = baselines
            .iter()
            .find(|b| b.0 == r.dataset && b.1 == r.representation && b.2 == r.threads)
            .map(|b| b.3);
        r.speedup_vs_atomic = match (base, r.total_time) {
            (Some(b), Some(t)) if t > 0.0 && r.succeeded() => Some(b / t),
            _ => None,
        };
    }
}

pub const RUN_CSV_HEADER: [&str; 22] = [
    "dataset",
    "representation",
    "algo",
    "threads",
    "repetitions",
    "num_vertices",
    "num_edges",
    "status",
    "total_time",
    "step0",
    "step1",
    "step2",
    "step3",
    "sort_time",
    "aux_footprint_bytes",
    "sorted",
    "method_chosen",
    "k",
    "coverage_estimate",
    "step3_imbalance",
    "speedup_vs_atomic",
    "verified",
];

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per run; the header is written even when `runs` is empty.
pub fn write_runs_csv<W: Write>(runs: &[RunReport], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_CSV_HEADER)?;
    for r in runs {
        let p = r.phase_times.as_ref();
        w.write_record([
            r.dataset.clone(),
            r.representation.clone(),
            r.algo.to_string(),
            r.threads.to_string(),
            r.repetitions.to_string(),
            r.num_vertices.to_string(),
            r.num_edges.to_string(),
            r.status.clone(),
            cell(r.total_time),
            cell(p.and_then(|p| p.step0)),
            cell(p.map(|p| p.step1)),
            cell(p.map(|p| p.step2)),
            cell(p.map(|p| p.step3)),
            cell(r.sort_time),
            cell(r.aux_footprint_bytes),
            cell(r.sorted),
            cell(r.method_chosen),
            cell(r.k),
            cell(r.coverage_estimate),
            cell(r.step3_imbalance),
            cell(r.speedup_vs_atomic),
            cell(r.verification.as_ref().map(|v| v.passed)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FootprintRow {
    pub dataset: String,
    pub representation: String,
    pub algo: Algorithm,
    pub threads: usize,
    pub aux_footprint_bytes: u64,
    pub graph_bytes: u64,
    /// Auxiliary bytes as a multiple of the input graph's size.
    pub multiple: f64,
}

pub fn footprint_report(runs: &[RunReport]) -> Vec<FootprintRow> {
    runs.iter()
        .filter_map(|r| {
            let aux = r.aux_footprint_bytes?;
            Some(FootprintRow {
                dataset: r.dataset.clone(),
                representation: r.representation.clone(),
                algo: r.algo,
                threads: r.threads,
                aux_footprint_bytes: aux,
                graph_bytes: r.graph_bytes,
                multiple: if r.graph_bytes == 0 { 0.0 } else { aux as f64 / r.graph_bytes as f64 },
            })
        })
        .collect()
}

pub fn write_footprint_csv<W: Write>(rows: &[FootprintRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["dataset", "representation", "algo", "threads", "aux_footprint_bytes", "graph_bytes", "multiple"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_skewed, sample_graph, sorted_lists};

    fn small_cfg() -> BenchConfig {
        BenchConfig {
            threads: vec![2],
            repetitions: 1,
            verify: Some(VerifyMode::FullOracle),
            transpose: TransposeConfig {
                footprint_limit: Some(1 << 30),
                subgraph_edges: Some(1000),
                budget: HdvBudget::new(1 << 16, 1),
                potra: PotraOptions::default(),
            },
            ..BenchConfig::default()
        }
    }

    fn dataset(g: CsrGraph<u32>) -> Dataset {
        Dataset { name: "g".into(), representation: "CSR".into(), graph: g.into() }
    }

    #[test]
    fn all_algorithms_verify() {
        let g = generate_skewed(2000, 20_000, 1.1, 1).unwrap();
        let runs = run_benchmark(&[dataset(g)], &small_cfg());
        assert_eq!(runs.len(), 4);
        for r in &runs {
            assert!(r.succeeded(), "{:?}", r.status);
            assert!(r.verification.as_ref().unwrap().passed);
            let p = r.phase_times.as_ref().unwrap();
            assert!(r.total_time.unwrap() + 1e-6 >= p.total());
        }
        let atomic = runs.iter().find(|r| r.algo == Algorithm::Atomic).unwrap();
        assert_eq!(atomic.speedup_vs_atomic, Some(1.0));
        assert!(runs.iter().find(|r| r.algo == Algorithm::Potra).unwrap().method_chosen.is_some());
    }

    #[test]
    fn scantrans_over_limit_is_marked() {
        let g = generate_skewed(10_000, 20_000, 1.0, 1).unwrap();
        let mut cfg = small_cfg();
        cfg.algorithms = vec![Algorithm::Atomic, Algorithm::ScanTrans];
        cfg.transpose.footprint_limit = Some(1000);
        let runs = run_benchmark(&[dataset(g)], &cfg);
        assert!(runs[0].succeeded());
        assert_eq!(runs[1].status, OOM_PRECHECK);
        assert_eq!(runs[1].speedup_vs_atomic, None);
        let mut buf = Vec::new();
        write_runs_csv(&runs, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("OOM-precheck"));
    }

    #[test]
    fn empty_config_gives_header_only() {
        let mut buf = Vec::new();
        write_runs_csv(&run_benchmark(&[], &small_cfg()), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("dataset,representation,algo,threads"));
        let mut buf = Vec::new();
        write_footprint_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn four_representations() {
        let reps = representations(&sample_graph(), 5);
        let labels: Vec<_> = reps.iter().map(|r| r.0.label()).collect();
        assert_eq!(labels, ["CSR", "CSR-Rnd", "CSC", "CSC-Rnd"]);
        assert_eq!(&reps[2].1.offsets()[..2], &[0, 1]);
        // the two randomized forms are transposes of each other
        assert_eq!(transpose_oracle(&reps[1].1), sorted_lists(&reps[3].1));
        assert_eq!(transpose_oracle(&reps[2].1), sorted_lists(&sample_graph()));
    }

    #[test]
    fn prepared_files_are_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let g = generate_skewed(500, 3000, 1.0, 2).unwrap();
        let a = prepare_representations(&g, 9, &dir.path().join("a"), "g").unwrap();
        let b = prepare_representations(&g, 9, &dir.path().join("b"), "g").unwrap();
        for ((_, pa), (_, pb)) in a.iter().zip(&b) {
            assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
        }
    }

    #[test]
    fn footprint_multiples() {
        let g = generate_skewed(50_000, 100_000, 1.0, 1).unwrap();
        let mut cfg = small_cfg();
        cfg.algorithms = vec![Algorithm::ScanTrans];
        cfg.threads = vec![1, 4];
        cfg.verify = None;
        let rows = footprint_report(&run_benchmark(&[dataset(g.clone())], &cfg));
        let graph_bytes = g.size_bytes() as f64;
        assert_eq!(rows[0].multiple, 50_000.0 * 4.0 / graph_bytes);
        assert_eq!(rows[1].multiple, 4.0 * 50_000.0 * 4.0 / graph_bytes);
    }
}
