//! Thread helpers shared by the transposition kernels.
//!
//! Every kernel runs on an explicit number of scoped OS threads so that
//! thread IDs are stable across phases (PoTra and ScanTrans rely on the same
//! thread revisiting the same work in their counting and writing steps).

use std::marker::PhantomData;
use std::ops::Range;
use std::thread;

/// Runs `f(tid)` on `threads` scoped threads and collects the results in
/// thread-ID order.
pub fn map_threads<R, F>(threads: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    let threads = threads.max(1);
    if threads == 1 {
        return vec![f(0)];
    }
    let f = &f;
    thread::scope(|s| {
        let handles: Vec<_> = (0..threads).map(|tid| s.spawn(move || f(tid))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
            .collect()
    })
}

/// Runs one closure per work item, each on its own scoped thread.
///
/// Used when every worker needs exclusive (`&mut`) access to its own slice.
pub fn for_each_owned<T, F>(items: Vec<T>, f: F)
where
    T: Send,
    F: Fn(usize, T) + Sync,
{
    if items.len() <= 1 {
        for (i, item) in items.into_iter().enumerate() {
            f(i, item);
        }
        return;
    }
    let f = &f;
    thread::scope(|s| {
        for (i, item) in items.into_iter().enumerate() {
            s.spawn(move || f(i, item));
        }
    });
}

/// Splits `0..n` into `parts` contiguous ranges whose lengths differ by at
/// most one.
pub fn even_ranges(n: usize, parts: usize) -> Vec<Range<usize>> {
    let parts = parts.max(1);
    let base = n / parts;
    let extra = n % parts;
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Splits the vertices of a CSR offsets array into `parts` contiguous ranges
/// holding roughly equal numbers of edges.
pub fn edge_balanced_ranges(offsets: &[u64], parts: usize) -> Vec<Range<usize>> {
    let parts = parts.max(1);
    let n = offsets.len().saturating_sub(1);
    let total = offsets.last().copied().unwrap_or(0);
    let mut bounds = Vec::with_capacity(parts + 1);
    bounds.push(0usize);
    for p in 1..parts {
        let target = (total as u128 * p as u128 / parts as u128) as u64;
        // first vertex whose list starts at or after the target edge
        let v = offsets[..n].partition_point(|&o| o < target);
        bounds.push(v.max(*bounds.last().unwrap()));
    }
    bounds.push(n);
    bounds.windows(2).map(|w| w[0]..w[1]).collect()
}

/// Splits `slice` into consecutive mutable chunks matching `ranges`, which
/// must tile `0..slice.len()` in order.
pub fn split_by_ranges<'a, T>(mut slice: &'a mut [T], ranges: &[Range<usize>]) -> Vec<&'a mut [T]> {
    let mut out = Vec::with_capacity(ranges.len());
    let mut consumed = 0;
    for r in ranges {
        debug_assert_eq!(r.start, consumed);
        let (head, tail) = std::mem::take(&mut slice).split_at_mut(r.end - r.start);
        out.push(head);
        slice = tail;
        consumed = r.end;
    }
    out
}

/// Splits each array in `arrays` by `ranges` and regroups the pieces so that
/// worker `w` receives the `w`-th piece of every array.
pub fn split_columns<'a, T>(arrays: &'a mut [Vec<T>], ranges: &[Range<usize>]) -> Vec<Vec<&'a mut [T]>> {
    let mut per_worker: Vec<Vec<&'a mut [T]>> = (0..ranges.len()).map(|_| Vec::with_capacity(arrays.len())).collect();
    for array in arrays.iter_mut() {
        for (w, piece) in split_by_ranges(array.as_mut_slice(), ranges).into_iter().enumerate() {
            per_worker[w].push(piece);
        }
    }
    per_worker
}

/// Inclusive prefix sum in place using a block decomposition: parallel block
/// totals, a serial scan over the totals, then a parallel within-block scan.
pub fn inclusive_scan_in_place(values: &mut [u64], threads: usize) {
    let threads = threads.max(1).min(values.len().max(1));
    if threads == 1 || values.len() < 4096 {
        let mut acc = 0u64;
        for v in values.iter_mut() {
            acc += *v;
            *v = acc;
        }
        return;
    }
    let ranges = even_ranges(values.len(), threads);
    let totals: Vec<u64> = {
        let chunks = split_by_ranges(values, &ranges);
        let shared: Vec<&[u64]> = chunks.into_iter().map(|c| &*c).collect();
        map_threads(threads, |tid| shared[tid].iter().sum())
    };
    let mut carry = 0u64;
    let starts: Vec<u64> = totals
        .iter()
        .map(|t| {
            let s = carry;
            carry += t;
            s
        })
        .collect();
    let chunks = split_by_ranges(values, &ranges);
    for_each_owned(chunks.into_iter().zip(starts).collect(), |_, (chunk, start)| {
        let mut acc = start;
        for v in chunk.iter_mut() {
            acc += *v;
            *v = acc;
        }
    });
}

/// A slice that several threads may write concurrently at indices they have
/// reserved exclusively (for instance through an atomic fetch-and-add).
pub struct SharedSlice<'a, T> {
    ptr: *mut T,
    len: usize,
    _marker: PhantomData<&'a mut [T]>,
}

unsafe impl<T: Send> Send for SharedSlice<'_, T> {}
unsafe impl<T: Send> Sync for SharedSlice<'_, T> {}

impl<'a, T> SharedSlice<'a, T> {
    pub fn new(slice: &'a mut [T]) -> Self {
        Self {
            ptr: slice.as_mut_ptr(),
            len: slice.len(),
            _marker: PhantomData,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Writes `value` at `index`.
    ///
    /// # Safety
    /// No other thread may read or write `index` concurrently.
    #[inline]
    pub unsafe fn write(&self, index: usize, value: T) {
        assert!(index < self.len, "index {index} out of bounds ({})", self.len);
        // SAFETY: in bounds; exclusivity is the caller's contract.
        unsafe { self.ptr.add(index).write(value) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_ranges_tile() {
        let r = even_ranges(10, 3);
        assert_eq!(r, vec![0..4, 4..7, 7..10]);
        assert_eq!(even_ranges(0, 4).iter().map(|r| r.len()).sum::<usize>(), 0);
    }

    #[test]
    fn edge_balanced_ranges_tile_vertices() {
        let offsets = [0u64, 10, 10, 11, 12, 30, 31];
        let r = edge_balanced_ranges(&offsets, 3);
        assert_eq!(r.first().unwrap().start, 0);
        assert_eq!(r.last().unwrap().end, 6);
        for w in r.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn scan_matches_serial() {
        let mut v: Vec<u64> = (0..10_000u64).map(|i| i % 7).collect();
        let mut expected = v.clone();
        let mut acc = 0;
        for x in expected.iter_mut() {
            acc += *x;
            *x = acc;
        }
        inclusive_scan_in_place(&mut v, 5);
        assert_eq!(v, expected);
    }

    #[test]
    fn map_threads_orders_results() {
        assert_eq!(map_threads(4, |t| t * 2), vec![0, 2, 4, 6]);
    }
}
