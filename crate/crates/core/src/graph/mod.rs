//! Graph data model: compressed sparse row/column adjacency, on-disk formats,
//! synthetic generation, relabeling, and the serial reference transposition.

mod generate;
mod io;
mod oracle;
mod relabel;
mod stats;

use std::fmt::{self, Debug};
use std::hash::Hash;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::generate_skewed;
pub use io::{id_width_for, load_graph, store_graph, GraphFormat, HEADER_BYTES, MAGIC};
pub use oracle::{edge_multiset, sorted_lists, transpose_oracle, EdgeMultiset};
pub use relabel::{inverse_permutation, relabel, relabel_random};
pub use stats::{degree_stats, locality_metric, DegreeDirection, DegreeStats};

/// Integer type used to store vertex IDs in the `edges` array.
pub trait VertexId: Copy + Ord + Hash + Debug + Default + Send + Sync + 'static {
    /// Width in bytes, as recorded in the binary header.
    const BYTES: u8;

    fn index(self) -> usize;

    fn from_index(i: usize) -> Self;

    fn to_u64(self) -> u64 {
        self.index() as u64
    }
}

impl VertexId for u32 {
    const BYTES: u8 = 4;

    #[inline(always)]
    fn index(self) -> usize {
        self as usize
    }

    #[inline(always)]
    fn from_index(i: usize) -> Self {
        debug_assert!(i <= u32::MAX as usize);
        i as u32
    }
}

impl VertexId for u64 {
    const BYTES: u8 = 8;

    #[inline(always)]
    fn index(self) -> usize {
        self as usize
    }

    #[inline(always)]
    fn from_index(i: usize) -> Self {
        i as u64
    }
}

/// Which direction the neighbor lists describe. Both share one layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// Outgoing neighbor lists.
    Csr,
    /// Incoming neighbor lists.
    Csc,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Csr => Orientation::Csc,
            Orientation::Csc => Orientation::Csr,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Orientation::Csr => 0,
            Orientation::Csc => 1,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Csr => "CSR",
            Orientation::Csc => "CSC",
        })
    }
}

fn at(byte_offset: &Option<u64>) -> String {
    match byte_offset {
        Some(b) => format!(" (byte offset {b})"),
        None => String::new(),
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {reason}{}", at(.byte_offset))]
    MalformedHeader { reason: String, byte_offset: Option<u64> },
    #[error("truncated file: expected {expected} bytes, found {found}{}", at(.byte_offset))]
    Truncated { expected: u64, found: u64, byte_offset: Option<u64> },
    #[error("non-monotone offsets at vertex {vertex}: {prev} > {next}{}", at(.byte_offset))]
    NonMonotoneOffsets { vertex: usize, prev: u64, next: u64, byte_offset: Option<u64> },
    #[error("offsets must start at 0 and end at |E|={num_edges}, got first={first} last={last}{}", at(.byte_offset))]
    OffsetBounds { first: u64, last: u64, num_edges: u64, byte_offset: Option<u64> },
    #[error("offsets array has {len} entries, expected |V|+1 = {expected}")]
    OffsetsLength { len: usize, expected: u64 },
    #[error("edge {index} has endpoint {id} >= |V|={num_vertices}{}", at(.byte_offset))]
    EdgeOutOfRange { index: u64, id: u64, num_vertices: u64, byte_offset: Option<u64> },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A directed, unweighted graph in compressed sparse form.
///
/// `offsets` holds |V|+1 non-decreasing edge indices starting at 0 and ending
/// at |E|; the neighbors of vertex `v` are `edges[offsets[v]..offsets[v+1]]`.
/// Parallel edges and self-loops are allowed.
#[derive(Clone, PartialEq, Eq)]
pub struct CsrGraph<I = u32> {
    offsets: Vec<u64>,
    edges: Vec<I>,
    orientation: Orientation,
}

impl<I: VertexId> Debug for CsrGraph<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CsrGraph")
            .field("orientation", &self.orientation)
            .field("num_vertices", &self.num_vertices())
            .field("num_edges", &self.num_edges())
            .field("offsets", &Preview(&self.offsets))
            .field("edges", &Preview(&self.edges))
            .finish()
    }
}

struct Preview<'a, T>(&'a [T]);

impl<T: Debug> Debug for Preview<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() <= 32 {
            self.0.fmt(f)
        } else {
            write!(f, "{:?}.. ({} total)", &self.0[..16], self.0.len())
        }
    }
}

impl<I: VertexId> CsrGraph<I> {
    /// Builds a graph after checking every structural invariant.
    pub fn from_parts(offsets: Vec<u64>, edges: Vec<I>, orientation: Orientation) -> Result<Self, GraphError> {
        validate(&offsets, &edges)?;
        Ok(Self { offsets, edges, orientation })
    }

    /// Builds a graph from arrays the caller has already validated.
    pub(crate) fn from_parts_unchecked(offsets: Vec<u64>, edges: Vec<I>, orientation: Orientation) -> Self {
        debug_assert!(validate(&offsets, &edges).is_ok());
        Self { offsets, edges, orientation }
    }

    /// Builds a graph from per-vertex neighbor lists.
    pub fn from_adjacency(lists: &[Vec<I>], orientation: Orientation) -> Result<Self, GraphError> {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0u64);
        let mut edges = Vec::new();
        for l in lists {
            edges.extend_from_slice(l);
            offsets.push(edges.len() as u64);
        }
        Self::from_parts(offsets, edges, orientation)
    }

    pub fn empty(orientation: Orientation) -> Self {
        Self { offsets: vec![0], edges: Vec::new(), orientation }
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn edges(&self) -> &[I] {
        &self.edges
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    #[inline]
    pub fn edge_range(&self, v: usize) -> Range<usize> {
        self.offsets[v] as usize..self.offsets[v + 1] as usize
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[I] {
        &self.edges[self.edge_range(v)]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> u64 {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Bytes occupied by the offsets and edges arrays.
    pub fn size_bytes(&self) -> u64 {
        self.offsets.len() as u64 * 8 + self.edges.len() as u64 * u64::from(I::BYTES)
    }

    /// True when every neighbor list is in ascending order.
    pub fn lists_sorted(&self) -> bool {
        (0..self.num_vertices()).all(|v| self.neighbors(v).windows(2).all(|w| w[0] <= w[1]))
    }

    pub fn into_parts(self) -> (Vec<u64>, Vec<I>, Orientation) {
        (self.offsets, self.edges, self.orientation)
    }

    pub(crate) fn edges_mut(&mut self) -> &mut [I] {
        &mut self.edges
    }
}

pub(crate) fn validate<I: VertexId>(offsets: &[u64], edges: &[I]) -> Result<(), GraphError> {
    if offsets.is_empty() {
        return Err(GraphError::OffsetsLength { len: 0, expected: 1 });
    }
    let first = offsets[0];
    let last = *offsets.last().unwrap();
    if first != 0 || last != edges.len() as u64 {
        return Err(GraphError::OffsetBounds {
            first,
            last,
            num_edges: edges.len() as u64,
            byte_offset: None,
        });
    }
    if let Some(v) = offsets.windows(2).position(|w| w[0] > w[1]) {
        return Err(GraphError::NonMonotoneOffsets {
            vertex: v + 1,
            prev: offsets[v],
            next: offsets[v + 1],
            byte_offset: None,
        });
    }
    let n = (offsets.len() - 1) as u64;
    if let Some(i) = edges.iter().position(|e| e.to_u64() >= n) {
        return Err(GraphError::EdgeOutOfRange {
            index: i as u64,
            id: edges[i].to_u64(),
            num_vertices: n,
            byte_offset: None,
        });
    }
    Ok(())
}

/// A graph whose ID width was decided at load time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyGraph {
    U32(CsrGraph<u32>),
    U64(CsrGraph<u64>),
}

/// Evaluates `$body` with `$g` bound to the concrete graph inside an
/// [`AnyGraph`].
#[macro_export]
macro_rules! with_graph {
    ($any:expr, $g:ident => $body:expr) => {
        match $any {
            $crate::graph::AnyGraph::U32($g) => $body,
            $crate::graph::AnyGraph::U64($g) => $body,
        }
    };
}

impl AnyGraph {
    pub fn num_vertices(&self) -> usize {
        with_graph!(self, g => g.num_vertices())
    }

    pub fn num_edges(&self) -> usize {
        with_graph!(self, g => g.num_edges())
    }

    pub fn orientation(&self) -> Orientation {
        with_graph!(self, g => g.orientation())
    }

    pub fn id_width(&self) -> u8 {
        match self {
            AnyGraph::U32(_) => 4,
            AnyGraph::U64(_) => 8,
        }
    }

    /// Narrows to 32-bit IDs, failing when some vertex ID does not fit.
    pub fn into_u32(self) -> Result<CsrGraph<u32>, GraphError> {
        match self {
            AnyGraph::U32(g) => Ok(g),
            AnyGraph::U64(g) => {
                if g.num_vertices() as u64 > 1u64 << 32 {
                    return Err(GraphError::InvalidParameter(format!(
                        "graph has {} vertices; 32-bit IDs cannot address them",
                        g.num_vertices()
                    )));
                }
                let (offsets, edges, orientation) = g.into_parts();
                let edges = edges.into_iter().map(|e| e as u32).collect();
                Ok(CsrGraph::from_parts_unchecked(offsets, edges, orientation))
            }
        }
    }
}

impl From<CsrGraph<u32>> for AnyGraph {
    fn from(g: CsrGraph<u32>) -> Self {
        AnyGraph::U32(g)
    }
}

impl From<CsrGraph<u64>> for AnyGraph {
    fn from(g: CsrGraph<u64>) -> Self {
        AnyGraph::U64(g)
    }
}

/// Builds a CSR graph with `num_vertices` vertices from `(owner, endpoint)`
/// pairs that are already sorted by owner.
pub(crate) fn compress_sorted_pairs<I: VertexId>(
    num_vertices: usize,
    pairs: impl ExactSizeIterator<Item = (I, I)>,
    orientation: Orientation,
) -> CsrGraph<I> {
    let mut offsets = vec![0u64; num_vertices + 1];
    let mut edges = Vec::with_capacity(pairs.len());
    for (owner, endpoint) in pairs {
        offsets[owner.index() + 1] += 1;
        edges.push(endpoint);
    }
    for v in 0..num_vertices {
        offsets[v + 1] += offsets[v];
    }
    CsrGraph::from_parts_unchecked(offsets, edges, orientation)
}

/// The four-vertex sample graph used throughout the docs and tests:
/// `0 -> {1, 2}`, `1 -> {2, 3}`, `2 -> {3}`, `3 -> {0, 2}`.
pub fn sample_graph() -> CsrGraph<u32> {
    CsrGraph::from_parts(vec![0, 2, 4, 5, 7], vec![1, 2, 2, 3, 3, 0, 2], Orientation::Csr).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_monotone_offsets() {
        let err = CsrGraph::<u32>::from_parts(vec![0, 2, 1, 3], vec![0, 1, 2], Orientation::Csr).unwrap_err();
        assert!(err.to_string().contains("non-monotone offsets"), "{err}");
    }

    #[test]
    fn rejects_out_of_range_endpoint() {
        let err = CsrGraph::<u32>::from_parts(vec![0, 1, 2], vec![0, 2], Orientation::Csr).unwrap_err();
        assert!(matches!(err, GraphError::EdgeOutOfRange { index: 1, id: 2, .. }));
    }

    #[test]
    fn rejects_bad_offset_bounds() {
        assert!(CsrGraph::<u32>::from_parts(vec![0, 1], vec![0, 0], Orientation::Csr).is_err());
        assert!(CsrGraph::<u32>::from_parts(vec![], vec![], Orientation::Csr).is_err());
    }

    #[test]
    fn sample_graph_shape() {
        let g = sample_graph();
        assert_eq!(g.num_vertices(), 4);
        assert_eq!(g.num_edges(), 7);
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert_eq!(g.degree(0), 2);
    }

    #[test]
    fn empty_graph() {
        let g = CsrGraph::<u32>::empty(Orientation::Csr);
        assert_eq!(g.offsets(), &[0]);
        assert_eq!(g.num_vertices(), 0);
    }
}
