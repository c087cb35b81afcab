use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use potra::bench::{
    describe_output, footprint_report, prepare_representations, run_benchmark, timed_run, verify_output,
    write_footprint_csv, write_runs_csv, BenchConfig, Dataset, RunReport, TransposeConfig, VerifyMode,
};
use potra::graph::{
    degree_stats, generate_skewed, load_graph, locality_metric, relabel_random, sorted_lists, store_graph, DegreeDirection,
    GraphFormat,
};
use potra::memlat::{measure_timings, write_rates_csv, MeasureConfig, DEFAULT_MAX_MISS_BYTES};
use potra::model::{crossover, plot_model, write_model_csv, HdvBudget, ModelInput};
use potra::potra::{Method, PotraOptions, DEFAULT_PARTITION_EDGES, DEFAULT_SAMPLE_FRACTION};
use potra::{sysinfo, with_graph, AnyGraph, Algorithm, MemoryTimings, TransposeError};

const EXIT_VERIFY: u8 = 2;
const EXIT_PRECHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "potra", version, about = "Parallel graph transposition (CSR <-> CSC) toolkit")]
struct Cli {
    /// Worker threads (default: all hardware threads)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (or directory for prep4); graphs are always written in the
    /// binary .potg format, tables go to stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph with Zipf-distributed destinations
    Gen {
        #[arg(long)]
        vertices: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = 1.0)]
        exponent: f64,
    },
    /// Randomly permute vertex IDs
    Relabel { input: PathBuf },
    /// Write CSR, CSR-Rnd, CSC and CSC-Rnd forms of a graph into a directory
    Prep4 {
        input: PathBuf,
        /// File name stem (default: input file stem)
        #[arg(long)]
        name: Option<String>,
    },
    /// Transpose one graph
    Transpose(TransposeArgs),
    /// Sort every neighbor list
    Sort { input: PathBuf },
    /// Check that OUTPUT is the transpose of INPUT
    Verify {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value = "auto")]
        mode: VerifyMode,
    },
    /// Run algorithms x thread counts over several graphs
    Bench(BenchArgs),
    /// Measure random access times in the cache-hit and cache-miss regimes
    Microbench {
        /// Hit-regime array size (default: detected L3)
        #[arg(long)]
        l3_bytes: Option<u64>,
        #[arg(long, default_value_t = 10_000_000)]
        iters: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_MISS_BYTES)]
        max_miss_bytes: u64,
    },
    /// Evaluate the per-edge cost model from measured timings
    Model {
        /// CSV written by `microbench`
        #[arg(long)]
        timings: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.5, 0.8])]
        coverage: Vec<f64>,
        /// Print the crossover hit ratio per coverage instead of the curves
        #[arg(long)]
        crossover: bool,
    },
    /// Degree distribution and locality of a graph
    Stats {
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<u64>,
        /// Degrees of the stored lists instead of endpoint frequencies
        #[arg(long)]
        out_degrees: bool,
    },
}

#[derive(Args)]
struct TransposeArgs {
    input: PathBuf,
    #[arg(long, default_value = "potra")]
    algo: Algorithm,
    /// Sort neighbor lists after transposing
    #[arg(long)]
    sort: bool,
    /// Write the JSON run report here (default: stdout)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Verify the output before writing it
    #[arg(long)]
    verify: Option<VerifyMode>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = Algorithm::ALL.to_vec())]
    algos: Vec<Algorithm>,
    /// Thread counts to sweep (default: --threads)
    #[arg(long, value_delimiter = ',')]
    thread_list: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Verification mode, or "none"
    #[arg(long, default_value = "auto")]
    verify: String,
    /// Include a sort pass for algorithms with unsorted output
    #[arg(long)]
    sort: bool,
    /// Also write the full reports as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    /// Also write the footprint table as CSV
    #[arg(long)]
    footprint: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args)]
struct Knobs {
    /// ScanTrans auxiliary-memory limit in bytes (default: available memory)
    #[arg(long)]
    footprint_limit: Option<u64>,
    /// MergeTrans subgraph size in edges
    #[arg(long)]
    subgraph_edges: Option<usize>,
    /// PoTra HDV cache budget in bytes (default: L2 + L3)
    #[arg(long)]
    cache_bytes: Option<u64>,
    /// Hash table load factor
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 12.0)]
    record_bytes: f64,
    #[arg(long, default_value_t = 13.0)]
    per_hdv_bytes: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_FRACTION)]
    sample_frac: f64,
    /// Edges per probe (default: 1% of |E|, at most 2^24)
    #[arg(long)]
    probe_edges: Option<u64>,
    #[arg(long)]
    force_method: Option<Method>,
    #[arg(long, default_value_t = DEFAULT_PARTITION_EDGES)]
    partition_edges: usize,
    /// Report exact HDV coverage (one extra pass)
    #[arg(long)]
    exact_coverage: bool,
}

impl Knobs {
    fn config(&self, seed: u64) -> TransposeConfig {
        TransposeConfig {
            footprint_limit: self.footprint_limit,
            subgraph_edges: self.subgraph_edges,
            budget: HdvBudget {
                cache_bytes: self.cache_bytes.unwrap_or_else(potra::bench::default_cache_budget),
                record_bytes: self.record_bytes,
                load_factor: self.alpha,
                per_hdv_bytes: self.per_hdv_bytes,
                threads: 1,
            },
            potra: PotraOptions {
                sample_fraction: self.sample_frac,
                probe_edges: self.probe_edges,
                force_method: self.force_method,
                seed,
                partition_edges: self.partition_edges,
                exact_coverage: self.exact_coverage,
            },
        }
    }
}

/// A failure with its own exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(Exit(code, _)) = e.downcast_ref::<Exit>() {
                return ExitCode::from(*code);
            }
            if let Some(TransposeError::FootprintExceedsLimit { .. }) = e.downcast_ref::<TransposeError>() {
                return ExitCode::from(EXIT_PRECHECK);
            }
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> Result<AnyGraph> {
    let g = load_graph(path, GraphFormat::from_path(path)).with_context(|| format!("reading {}", path.display()))?;
    info!("{}: |V|={} |E|={} {}", path.display(), g.num_vertices(), g.num_edges(), g.orientation());
    Ok(g)
}

fn required_out(out: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    out.clone().ok_or_else(|| anyhow!("--out is required to write the {what}"))
}

/// `--out` if given, else stdout.
fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads.unwrap_or_else(sysinfo::hardware_threads).max(1);
    let seed = cli.seed;
    match cli.cmd {
        Command::Gen { vertices, edges, exponent } => {
            let out = required_out(&cli.out, "graph")?;
            let g = generate_skewed(vertices, edges, exponent, seed)?;
            store_graph(&g, &out)?;
        }
        Command::Relabel { input } => {
            let out = required_out(&cli.out, "graph")?;
            with_graph!(load(&input)?, g => store_graph(&relabel_random(&g, seed).0, &out))?;
        }
        Command::Prep4 { input, name } => {
            let dir = required_out(&cli.out, "representations")?;
            let stem = name.unwrap_or_else(|| {
                input.file_stem().map_or_else(|| "graph".into(), |s| s.to_string_lossy().into_owned())
            });
            let files = with_graph!(load(&input)?, g => prepare_representations(&g, seed, &dir, &stem))?;
            for (r, path) in files {
                println!("{}\t{}", r.label(), path.display());
            }
        }
        Command::Transpose(args) => transpose(args, threads, seed, &cli.out)?,
        Command::Sort { input } => {
            let out = required_out(&cli.out, "graph")?;
            with_graph!(load(&input)?, g => store_graph(&sorted_lists(&g), &out))?;
        }
        Command::Verify { input, output, mode } => {
            let report = match (load(&input)?, load(&output)?) {
                (AnyGraph::U32(a), AnyGraph::U32(b)) => verify_output(&a, &b, mode, seed),
                (AnyGraph::U64(a), AnyGraph::U64(b)) => verify_output(&a, &b, mode, seed),
                _ => bail!("input and output use different vertex ID widths"),
            };
            write_json(&report, cli.out.as_deref())?;
            if !report.passed {
                return Err(Exit(EXIT_VERIFY, format!("verification failed: {}", report.detail)).into());
            }
        }
        Command::Bench(args) => bench(args, threads, seed, &cli.out)?,
        Command::Microbench { l3_bytes, iters, max_miss_bytes } => {
            let l3 = match l3_bytes.or_else(sysinfo::l3_bytes) {
                Some(b) => b,
                None => bail!("no L3 size detected; pass --l3-bytes"),
            };
            let cfg = MeasureConfig { max_miss_bytes, ..MeasureConfig::new(threads, l3, iters, seed) };
            let timings = measure_timings(&cfg)?;
            let violations = timings.monotonicity_violations(0.1);
            if !violations.is_empty() {
                log::warn!("miss regime faster than hit regime for {violations:?}");
            }
            write_rates_csv(&timings, sink(&cli.out)?)?;
        }
        Command::Model { timings, coverage, crossover: want_crossover } => {
            let file = File::open(&timings).with_context(|| format!("reading {}", timings.display()))?;
            let t = MemoryTimings::from_csv(file)?;
            if want_crossover {
                #[derive(Serialize)]
                struct Row {
                    coverage: f64,
                    crossover: potra::model::Crossover,
                }
                let rows: Vec<Row> = coverage
                    .iter()
                    .map(|&c| Row {
                        coverage: c,
                        crossover: crossover(&ModelInput { timings: t.clone(), hit_ratio: 0.0, coverage: c, num_edges: 0 }),
                    })
                    .collect();
                write_json(&rows, cli.out.as_deref())?;
            } else {
                write_model_csv(&plot_model(&t, &coverage), sink(&cli.out)?)?;
            }
        }
        Command::Stats { input, thresholds, out_degrees } => {
            let direction = if out_degrees { DegreeDirection::OutOfOffsets } else { DegreeDirection::OfEndpoints };
            #[derive(Serialize)]
            struct Stats {
                num_vertices: usize,
                num_edges: usize,
                orientation: String,
                degrees: potra::graph::DegreeStats,
                locality: f64,
            }
            let stats = with_graph!(load(&input)?, g => Stats {
                num_vertices: g.num_vertices(),
                num_edges: g.num_edges(),
                orientation: g.orientation().to_string(),
                degrees: degree_stats(&g, direction, &thresholds),
                locality: locality_metric(&g),
            });
            write_json(&stats, cli.out.as_deref())?;
        }
    }
    Ok(())
}

fn transpose(args: TransposeArgs, threads: usize, seed: u64, out: &Option<PathBuf>) -> Result<()> {
    let cfg = args.knobs.config(seed);
    let name = args.input.display().to_string();
    let g = load(&args.input)?;
    let mut report = RunReport::new(&name, &g.orientation().to_string(), args.algo, threads, 1, &g);
    let verify_failed = with_graph!(g, g => {
        let (result, total) = timed_run(&g, args.algo, threads, &cfg, args.sort)?;
        describe_output(&mut report, &result, total);
        let mut failed = None;
        if let Some(mode) = args.verify {
            let v = verify_output(&g, &result.graph, mode, seed);
            if !v.passed {
                failed = Some(v.detail.clone());
                report.status = format!("error: verification failed: {}", v.detail);
            }
            report.verification = Some(v);
        }
        if let Some(path) = out {
            if failed.is_none() {
                store_graph(&result.graph, path)?;
            }
        }
        failed
    });
    write_json(&report, args.report.as_deref())?;
    match verify_failed {
        Some(detail) => Err(Exit(EXIT_VERIFY, format!("verification failed: {detail}")).into()),
        None => Ok(()),
    }
}

fn bench(args: BenchArgs, threads: usize, seed: u64, out: &Option<PathBuf>) -> Result<()> {
    let verify = match args.verify.as_str() {
        "none" => None,
        other => Some(other.parse::<VerifyMode>().map_err(|e| anyhow!(e))?),
    };
    let mut datasets = Vec::new();
    for path in &args.inputs {
        let graph = load(path)?;
        let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        // prep4 names files <stem>.<representation>.potg
        let (name, representation) = match name.rsplit_once('.') {
            Some((stem, r)) if ["CSR", "CSR-Rnd", "CSC", "CSC-Rnd"].contains(&r) => (stem.to_string(), r.to_string()),
            _ => (name, graph.orientation().to_string()),
        };
        datasets.push(Dataset { name, representation, graph });
    }
    let cfg = BenchConfig {
        algorithms: args.algos,
        threads: if args.thread_list.is_empty() { vec![threads] } else { args.thread_list },
        repetitions: args.reps,
        verify,
        sort_output: args.sort,
        transpose: args.knobs.config(seed),
        seed,
    };
    let runs = run_benchmark(&datasets, &cfg);
    write_runs_csv(&runs, sink(out)?)?;
    if let Some(p) = &args.json {
        write_json(&runs, Some(p))?;
    }
    if let Some(p) = &args.footprint {
        write_footprint_csv(&footprint_report(&runs), BufWriter::new(File::create(p)?))?;
    }
    if let Some(bad) = runs.iter().find(|r| r.verification.as_ref().is_some_and(|v| !v.passed)) {
        return Err(Exit(EXIT_VERIFY, format!("verification failed for {} {} {}", bad.dataset, bad.representation, bad.algo)).into());
    }
    Ok(())
}
