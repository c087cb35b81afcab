//! Binary and text graph formats.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! offset  size        field
//! 0       4           magic "POTG"
//! 4       1           version = 1
//! 5       1           id width in bytes (4 or 8)
//! 6       1           orientation (0 = CSR, 1 = CSC)
//! 7       1           padding (0)
//! 8       8           |V|
//! 16      8           |E|
//! 24      8(|V|+1)    offsets
//! ..      w|E|        edges
//! ```
//!
//! The ID width is 4 when |V| <= 2^32 and 8 otherwise.
//!
//! The text format holds one `src dst` pair per line; `#` starts a comment.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::{compress_sorted_pairs, AnyGraph, CsrGraph, GraphError, Orientation, VertexId};

pub const MAGIC: &[u8; 4] = b"POTG";
pub const VERSION: u8 = 1;
pub const HEADER_BYTES: u64 = 24;

const CHUNK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    Binary,
    EdgeListText,
}

impl GraphFormat {
    /// `.potg` files are binary; anything else is read as an edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("potg") => GraphFormat::Binary,
            _ => GraphFormat::EdgeListText,
        }
    }
}

/// ID width in bytes that the binary format uses for `num_vertices`.
pub fn id_width_for(num_vertices: u64) -> u8 {
    if num_vertices <= 1u64 << 32 {
        4
    } else {
        8
    }
}

pub fn load_graph(path: &Path, format: GraphFormat) -> Result<AnyGraph, GraphError> {
    match format {
        GraphFormat::Binary => load_binary(BufReader::with_capacity(1 << 20, File::open(path)?)),
        GraphFormat::EdgeListText => load_text(BufReader::new(File::open(path)?)),
    }
}

/// Writes `g` in the binary format.
pub fn store_graph<I: VertexId>(g: &CsrGraph<I>, path: &Path) -> Result<(), GraphError> {
    let mut w = BufWriter::with_capacity(1 << 20, File::create(path)?);
    write_binary(g, &mut w)?;
    w.flush()?;
    Ok(())
}

pub(crate) fn write_header<W: Write>(
    w: &mut W,
    num_vertices: u64,
    num_edges: u64,
    orientation: Orientation,
) -> std::io::Result<u8> {
    let width = id_width_for(num_vertices);
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION, width, orientation.code(), 0])?;
    w.write_all(&num_vertices.to_le_bytes())?;
    w.write_all(&num_edges.to_le_bytes())?;
    Ok(width)
}

pub(crate) fn write_binary<I: VertexId, W: Write>(g: &CsrGraph<I>, w: &mut W) -> std::io::Result<()> {
    let width = write_header(w, g.num_vertices() as u64, g.num_edges() as u64, g.orientation())?;
    let mut buf = Vec::with_capacity(CHUNK * 8);
    for chunk in g.offsets().chunks(CHUNK) {
        buf.clear();
        for o in chunk {
            buf.extend_from_slice(&o.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    for chunk in g.edges().chunks(CHUNK) {
        buf.clear();
        for e in chunk {
            let v = e.to_u64();
            if width == 4 {
                buf.extend_from_slice(&(v as u32).to_le_bytes());
            } else {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Reader that tracks how many bytes it has consumed, for error reporting.
struct Tracked<R> {
    inner: R,
    pos: u64,
}

impl<R: Read> Tracked<R> {
    fn fill(&mut self, buf: &mut [u8], expected_total: u64) -> Result<(), GraphError> {
        let mut done = 0;
        while done < buf.len() {
            match self.inner.read(&mut buf[done..]) {
                Ok(0) => {
                    return Err(GraphError::Truncated {
                        expected: expected_total,
                        found: self.pos + done as u64,
                        byte_offset: Some(self.pos + done as u64),
                    })
                }
                Ok(n) => done += n,
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.pos += buf.len() as u64;
        Ok(())
    }
}

pub(crate) fn load_binary<R: Read>(reader: R) -> Result<AnyGraph, GraphError> {
    let mut r = Tracked { inner: reader, pos: 0 };
    let mut header = [0u8; HEADER_BYTES as usize];
    r.fill(&mut header, HEADER_BYTES)?;
    let bad = |reason: String, at: u64| GraphError::MalformedHeader { reason, byte_offset: Some(at) };
    if &header[0..4] != MAGIC {
        return Err(bad(format!("bad magic {:?}", &header[0..4]), 0));
    }
    if header[4] != VERSION {
        return Err(bad(format!("unsupported version {}", header[4]), 4));
    }
    let width = header[5];
    if width != 4 && width != 8 {
        return Err(bad(format!("id width must be 4 or 8, got {width}"), 5));
    }
    let orientation = match header[6] {
        0 => Orientation::Csr,
        1 => Orientation::Csc,
        o => return Err(bad(format!("unknown orientation {o}"), 6)),
    };
    let nv = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let ne = u64::from_le_bytes(header[16..24].try_into().unwrap());
    if width == 4 && nv > 1u64 << 32 {
        return Err(bad(format!("|V|={nv} needs 8-byte IDs but header says 4"), 5));
    }
    let expected = nv
        .checked_add(1)
        .and_then(|x| x.checked_mul(8))
        .and_then(|x| x.checked_add(ne.checked_mul(u64::from(width))?))
        .and_then(|x| x.checked_add(HEADER_BYTES))
        .ok_or_else(|| bad("sizes overflow".into(), 8))?;
    let offsets = read_offsets(&mut r, nv, ne, expected)?;
    let edges_start = r.pos;
    Ok(if width == 4 {
        AnyGraph::U32(read_edges::<u32, _>(&mut r, offsets, nv, ne, orientation, edges_start, expected)?)
    } else {
        AnyGraph::U64(read_edges::<u64, _>(&mut r, offsets, nv, ne, orientation, edges_start, expected)?)
    })
}

fn read_offsets<R: Read>(r: &mut Tracked<R>, nv: u64, ne: u64, expected: u64) -> Result<Vec<u64>, GraphError> {
    let total = (nv + 1) as usize;
    let mut offsets = Vec::with_capacity(total);
    let mut buf = vec![0u8; CHUNK * 8];
    let start = r.pos;
    while offsets.len() < total {
        let n = (total - offsets.len()).min(CHUNK);
        r.fill(&mut buf[..n * 8], expected)?;
        for c in buf[..n * 8].chunks_exact(8) {
            let o = u64::from_le_bytes(c.try_into().unwrap());
            let i = offsets.len();
            let at = Some(start + 8 * i as u64);
            if i == 0 && o != 0 {
                return Err(GraphError::OffsetBounds { first: o, last: o, num_edges: ne, byte_offset: at });
            }
            if let Some(&prev) = offsets.last() {
                if o < prev {
                    return Err(GraphError::NonMonotoneOffsets { vertex: i, prev, next: o, byte_offset: at });
                }
            }
            offsets.push(o);
        }
    }
    let last = *offsets.last().unwrap();
    if last != ne {
        return Err(GraphError::OffsetBounds {
            first: 0,
            last,
            num_edges: ne,
            byte_offset: Some(start + 8 * nv),
        });
    }
    Ok(offsets)
}

fn read_edges<I: VertexId, R: Read>(
    r: &mut Tracked<R>,
    offsets: Vec<u64>,
    nv: u64,
    ne: u64,
    orientation: Orientation,
    start: u64,
    expected: u64,
) -> Result<CsrGraph<I>, GraphError> {
    let width = I::BYTES as usize;
    let mut edges: Vec<I> = Vec::with_capacity(ne as usize);
    let mut buf = vec![0u8; CHUNK * width];
    while (edges.len() as u64) < ne {
        let n = ((ne - edges.len() as u64) as usize).min(CHUNK);
        r.fill(&mut buf[..n * width], expected)?;
        for c in buf[..n * width].chunks_exact(width) {
            let id = if width == 4 {
                u64::from(u32::from_le_bytes(c.try_into().unwrap()))
            } else {
                u64::from_le_bytes(c.try_into().unwrap())
            };
            if id >= nv {
                let index = edges.len() as u64;
                return Err(GraphError::EdgeOutOfRange {
                    index,
                    id,
                    num_vertices: nv,
                    byte_offset: Some(start + index * width as u64),
                });
            }
            edges.push(I::from_index(id as usize));
        }
    }
    Ok(CsrGraph::from_parts_unchecked(offsets, edges, orientation))
}

pub(crate) fn load_text<R: BufRead>(reader: R) -> Result<AnyGraph, GraphError> {
    let mut pairs: Vec<(u64, u64)> = Vec::new();
    let mut max_id: Option<u64> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut it = content.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<u64, GraphError> {
            let tok = tok.ok_or_else(|| GraphError::Parse { line: i + 1, reason: "expected `src dst`".into() })?;
            tok.parse()
                .map_err(|_| GraphError::Parse { line: i + 1, reason: format!("bad vertex ID {tok:?}") })
        };
        let (s, d) = (parse(it.next())?, parse(it.next())?);
        if it.next().is_some() {
            return Err(GraphError::Parse { line: i + 1, reason: "trailing tokens".into() });
        }
        max_id = Some(max_id.unwrap_or(0).max(s).max(d));
        pairs.push((s, d));
    }
    pairs.sort_unstable();
    let nv = max_id.map_or(0, |m| m + 1);
    Ok(if id_width_for(nv) == 4 {
        AnyGraph::U32(compress_sorted_pairs(
            nv as usize,
            pairs.into_iter().map(|(s, d)| (s as u32, d as u32)),
            Orientation::Csr,
        ))
    } else {
        AnyGraph::U64(compress_sorted_pairs(nv as usize, pairs.into_iter(), Orientation::Csr))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::with_graph;
    use crate::graph::sample_graph;

    fn encode(g: &CsrGraph<u32>) -> Vec<u8> {
        let mut out = Vec::new();
        write_binary(g, &mut out).unwrap();
        out
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample_graph());
        assert_eq!(&bytes[0..4], b"POTG");
        assert_eq!(bytes[4..8], [1, 4, 0, 0]);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 4);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 7);
        assert_eq!(bytes.len() as u64, HEADER_BYTES + 5 * 8 + 7 * 4);
    }

    #[test]
    fn round_trip_in_memory() {
        let g = sample_graph();
        let back = load_binary(&encode(&g)[..]).unwrap();
        assert_eq!(back, AnyGraph::U32(g));
    }

    #[test]
    fn empty_graph_round_trip() {
        let g = CsrGraph::<u32>::empty(Orientation::Csc);
        let back = load_binary(&encode(&g)[..]).unwrap();
        assert_eq!(back.num_vertices(), 0);
        with_graph!(&back, g => assert_eq!(g.offsets(), &[0]));
        assert_eq!(back.orientation(), Orientation::Csc);
    }

    #[test]
    fn non_monotone_offsets_reported_with_byte_offset() {
        let mut bytes = encode(&sample_graph());
        // offsets[2] (= 4) overwritten with 1, below offsets[1] = 2
        let at = HEADER_BYTES as usize + 2 * 8;
        bytes[at..at + 8].copy_from_slice(&1u64.to_le_bytes());
        let err = load_binary(&bytes[..]).unwrap_err();
        assert!(err.to_string().contains("non-monotone offsets"), "{err}");
        assert!(matches!(err, GraphError::NonMonotoneOffsets { vertex: 2, byte_offset: Some(b), .. } if b == at as u64));
    }

    #[test]
    fn truncated_file() {
        let bytes = encode(&sample_graph());
        let err = load_binary(&bytes[..bytes.len() - 3]).unwrap_err();
        match err {
            GraphError::Truncated { expected, found, byte_offset } => {
                assert_eq!(expected, bytes.len() as u64);
                assert_eq!(found, bytes.len() as u64 - 3);
                assert_eq!(byte_offset, Some(found));
            }
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(load_binary(&bytes[..10]).unwrap_err(), GraphError::Truncated { .. }));
    }

    #[test]
    fn bad_magic_and_width() {
        let mut bytes = encode(&sample_graph());
        bytes[0] = b'X';
        assert!(matches!(load_binary(&bytes[..]).unwrap_err(), GraphError::MalformedHeader { byte_offset: Some(0), .. }));
        let mut bytes = encode(&sample_graph());
        bytes[5] = 3;
        assert!(matches!(load_binary(&bytes[..]).unwrap_err(), GraphError::MalformedHeader { byte_offset: Some(5), .. }));
    }

    #[test]
    fn endpoint_out_of_range() {
        let mut bytes = encode(&sample_graph());
        let at = (HEADER_BYTES + 5 * 8 + 3 * 4) as usize;
        bytes[at..at + 4].copy_from_slice(&9u32.to_le_bytes());
        let err = load_binary(&bytes[..]).unwrap_err();
        assert!(matches!(err, GraphError::EdgeOutOfRange { index: 3, id: 9, byte_offset: Some(b), .. } if b == at as u64));
    }

    #[test]
    fn wide_ids_selected_above_2_pow_32() {
        assert_eq!(id_width_for(1 << 32), 4);
        assert_eq!(id_width_for((1 << 32) + 1), 8);
        let mut header = Vec::new();
        let w = write_header(&mut header, (1 << 32) + 1, 0, Orientation::Csr).unwrap();
        assert_eq!(w, 8);
        assert_eq!(header[5], 8);
    }

    #[test]
    fn sixty_four_bit_file_loads() {
        // hand-built file with 8-byte IDs
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"POTG");
        bytes.extend_from_slice(&[1, 8, 1, 0]);
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&1u64.to_le_bytes());
        for o in [0u64, 1, 1] {
            bytes.extend_from_slice(&o.to_le_bytes());
        }
        bytes.extend_from_slice(&1u64.to_le_bytes());
        let g = load_binary(&bytes[..]).unwrap();
        assert_eq!(g.id_width(), 8);
        assert_eq!(g.orientation(), Orientation::Csc);
    }

    #[test]
    fn text_edge_list_sorted_by_source_then_destination() {
        let text = "# sample\n3 2\n0 2\n0 1\n\n1 3 # trailing comment\n1 2\n2 3\n3 0\n";
        let g = load_text(text.as_bytes()).unwrap();
        assert_eq!(g, AnyGraph::U32(sample_graph()));
    }

    #[test]
    fn text_keeps_duplicates_and_reports_bad_lines() {
        let g = load_text("0 1\n0 1\n".as_bytes()).unwrap().into_u32().unwrap();
        assert_eq!(g.edges(), &[1, 1]);
        let err = load_text("0 1\nfoo 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
        let empty = load_text("# nothing\n".as_bytes()).unwrap();
        assert_eq!(empty.num_vertices(), 0);
    }
}
