//! Read-only open-addressing table from HDV vertex ID to dense HDV index.

use std::mem::size_of;

const EMPTY: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(C, packed(4))]
struct Record {
    key: u64,
    index: u32,
}

/// Linear probing over `capacity = ceil(k / load_factor)` packed 12-byte
/// records, with slot selection by multiply-shift range reduction instead of
/// a power-of-two mask, so the table never exceeds its share of the cache
/// budget by more than one record.
#[derive(Clone, Debug)]
pub struct HdvTable {
    slots: Vec<Record>,
}

impl HdvTable {
    /// Builds the table; `ids` must be distinct and none may equal `u64::MAX`.
    pub fn new(ids: &[u64], load_factor: f64) -> Self {
        let k = ids.len();
        if k == 0 {
            return Self { slots: Vec::new() };
        }
        assert!(load_factor > 0.0 && load_factor <= 1.0, "load factor {load_factor}");
        assert!(k <= u32::MAX as usize, "too many HDV");
        let mut cap = (k as f64 / load_factor).ceil() as usize;
        if cap <= k {
            // keep one empty slot so a failed probe terminates
            cap = k + 1;
        }
        let mut slots = vec![Record { key: EMPTY, index: 0 }; cap];
        for (i, &id) in ids.iter().enumerate() {
            assert_ne!(id, EMPTY, "reserved key");
            let mut s = slot_of(id, cap);
            loop {
                let key = slots[s].key;
                if key == EMPTY {
                    slots[s] = Record { key: id, index: i as u32 };
                    break;
                }
                assert_ne!(key, id, "duplicate HDV id {id}");
                s += 1;
                if s == cap {
                    s = 0;
                }
            }
        }
        Self { slots }
    }

    #[inline]
    pub fn lookup(&self, v: u64) -> Option<u32> {
        let cap = self.slots.len();
        if cap == 0 {
            return None;
        }
        let mut s = slot_of(v, cap);
        loop {
            let r = self.slots[s];
            let key = r.key;
            if key == v {
                return Some(r.index);
            }
            if key == EMPTY {
                return None;
            }
            s += 1;
            if s == cap {
                s = 0;
            }
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn occupancy(&self) -> usize {
        self.slots.iter().filter(|r| ({ r.key }) != EMPTY).count()
    }

    pub fn bytes(&self) -> u64 {
        (self.slots.len() * size_of::<Record>()) as u64
    }
}

#[inline]
fn slot_of(v: u64, cap: usize) -> usize {
    let h = (v ^ (v >> 29)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    ((u128::from(h) * cap as u128) >> 64) as usize
}
