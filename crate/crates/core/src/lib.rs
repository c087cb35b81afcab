//! Shared-memory graph transposition.
//!
//! Converts a graph between its CSR (outgoing neighbor lists) and CSC
//! (incoming neighbor lists) representations. Four parallel algorithms are
//! provided: an atomic fetch-and-add baseline, the per-thread-counter
//! `ScanTrans`, the subgraph-merging `MergeTrans`, and PoTra, which keeps the
//! counters of high-degree vertices in small thread-private arrays sized to the
//! CPU caches while low-degree vertices share atomically updated arrays.
//!
//! Supporting modules measure random memory access rates ([`memlat`]), model
//! the per-edge cost of the atomic and hash-based methods ([`model`]), and
//! drive benchmarks with verification and footprint reporting ([`bench`]).

pub mod baselines;
pub mod bench;
pub mod graph;
pub mod memlat;
pub mod model;
pub mod par;
pub mod potra;
pub mod sysinfo;

pub use baselines::{
    prefix_sum_parallel, sort_neighbor_lists, transpose_atomic, transpose_mergetrans,
    transpose_scantrans, Algorithm, PhaseTimes, TransposeError, TransposeOutput,
};
pub use graph::{AnyGraph, CsrGraph, GraphError, Orientation, VertexId};
pub use memlat::{MemoryTimings, Xoshiro256StarStar};
pub use potra::{transpose_potra, HdvPlan, Method, PotraOptions};
