//! Bit-packed circular buffers holding the keys (and satellite values) of a
//! leaf.
//!
//! A buffer has a fixed capacity of `b` slots of `k` bits each. Logical slot
//! `i` lives at physical slot `(head + i) mod b`, so both ends support
//! constant-time push and pop. Interior insertions and removals shift the
//! shorter side by one slot, moving up to 64 bits per step.

use std::cmp::Ordering;

use crate::bits;
use crate::error::{Error, Result};
use crate::order::KeyOrder;

#[derive(Clone, Debug)]
pub struct PackedKeyBuffer {
    words: Vec<u64>,
    capacity: usize,
    width: u32,
    head: usize,
    len: usize,
    keys_moved: u64,
}

impl PackedKeyBuffer {
    pub fn new(capacity: usize, width: u32) -> Result<Self> {
        Self::with_head(capacity, width, 0)
    }

    /// Creates an empty buffer whose first logical slot sits at physical
    /// slot `head`.
    pub fn with_head(capacity: usize, width: u32, head: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParams("buffer capacity must be positive".into()));
        }
        if width == 0 || width > 64 {
            return Err(Error::InvalidParams(format!("key width {width} not in 1..=64")));
        }
        if head >= capacity {
            return Err(Error::InvalidParams(format!("head {head} >= capacity {capacity}")));
        }
        Ok(Self {
            // one spare word so straddling reads of the last slot stay in bounds
            words: vec![0; bits::words_for(capacity * width as usize) + 1],
            capacity,
            width,
            head,
            len: 0,
            keys_moved: 0,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn is_full(&self) -> bool {
        self.len == self.capacity
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn head(&self) -> usize {
        self.head
    }

    /// Total number of keys shifted by interior insertions and removals.
    pub fn keys_moved(&self) -> u64 {
        self.keys_moved
    }

    #[inline]
    fn phys(&self, logical: usize) -> usize {
        let p = self.head + logical;
        if p >= self.capacity {
            p - self.capacity
        } else {
            p
        }
    }

    #[inline]
    fn read_phys(&self, slot: usize) -> u64 {
        bits::read(&self.words, slot * self.width as usize, self.width)
    }

    #[inline]
    fn write_phys(&mut self, slot: usize, value: u64) {
        bits::write(&mut self.words, slot * self.width as usize, self.width, value)
    }

    fn check_width(&self, key: u64) -> Result<()> {
        if self.width < 64 && key >> self.width != 0 {
            return Err(Error::KeyTooWide { key, width: self.width });
        }
        Ok(())
    }

    /// Key at logical slot `i`. Panics when `i >= len`.
    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        assert!(i < self.len, "slot {i} out of bounds for length {}", self.len);
        self.read_phys(self.phys(i))
    }

    /// Overwrites logical slot `i`. Panics when `i >= len`.
    pub fn set(&mut self, i: usize, value: u64) {
        assert!(i < self.len, "slot {i} out of bounds for length {}", self.len);
        let p = self.phys(i);
        self.write_phys(p, value);
    }

    pub fn first(&self) -> Option<u64> {
        (self.len > 0).then(|| self.get(0))
    }

    pub fn last(&self) -> Option<u64> {
        (self.len > 0).then(|| self.get(self.len - 1))
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = u64> + ExactSizeIterator + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Moves logical slots `[from, from + count)` one slot to the right.
    /// Requires `from + count < capacity`.
    fn shift_right(&mut self, from: usize, count: usize) {
        let w = self.width as usize;
        let mut remaining = count;
        while remaining > 0 {
            let src_end = self.phys(from + remaining - 1) + 1;
            let dst_end = self.phys(from + remaining) + 1;
            let chunk = remaining.min(src_end).min(dst_end);
            bits::copy_within(&mut self.words, (src_end - chunk) * w, (dst_end - chunk) * w, chunk * w);
            remaining -= chunk;
        }
        self.keys_moved += count as u64;
    }

    /// Moves logical slots `[from, from + count)` one slot to the left.
    /// Requires `from >= 1`.
    fn shift_left(&mut self, from: usize, count: usize) {
        let w = self.width as usize;
        let mut done = 0;
        while done < count {
            let src = self.phys(from + done);
            let dst = self.phys(from + done - 1);
            let chunk = (count - done).min(self.capacity - src).min(self.capacity - dst);
            bits::copy_within(&mut self.words, src * w, dst * w, chunk * w);
            done += chunk;
        }
        self.keys_moved += count as u64;
    }

    /// Inserts `key` at logical slot `rank`, shifting the shorter side.
    pub fn insert_at(&mut self, rank: usize, key: u64) -> Result<()> {
        if self.is_full() {
            return Err(Error::Full { capacity: self.capacity });
        }
        if rank > self.len {
            return Err(Error::RankOutOfBounds { rank, len: self.len });
        }
        self.check_width(key)?;
        if rank < self.len - rank {
            self.head = if self.head == 0 { self.capacity - 1 } else { self.head - 1 };
            self.len += 1;
            if rank > 0 {
                self.shift_left(1, rank);
            }
        } else {
            if rank < self.len {
                self.shift_right(rank, self.len - rank);
            }
            self.len += 1;
        }
        let p = self.phys(rank);
        self.write_phys(p, key);
        Ok(())
    }

    /// Removes and returns the key at logical slot `rank`.
    pub fn remove_at(&mut self, rank: usize) -> Result<u64> {
        if self.is_empty() {
            return Err(Error::Empty);
        }
        if rank >= self.len {
            return Err(Error::RankOutOfBounds { rank, len: self.len });
        }
        let key = self.get(rank);
        let after = self.len - 1 - rank;
        if rank < after {
            if rank > 0 {
                self.shift_right(0, rank);
            }
            self.head = self.phys(1);
        } else if after > 0 {
            self.shift_left(rank + 1, after);
        }
        self.len -= 1;
        if self.len == 0 {
            self.head = 0;
        }
        Ok(key)
    }

    pub fn push_front(&mut self, key: u64) -> Result<()> {
        self.insert_at(0, key)
    }

    pub fn push_back(&mut self, key: u64) -> Result<()> {
        self.insert_at(self.len, key)
    }

    pub fn pop_front(&mut self) -> Result<u64> {
        self.remove_at(0)
    }

    pub fn pop_back(&mut self) -> Result<u64> {
        if self.is_empty() {
            return Err(Error::Empty);
        }
        self.remove_at(self.len - 1)
    }

    /// Number of stored keys `<= key` under `order` (binary search).
    pub fn rank_of<O: KeyOrder + ?Sized>(&self, key: u64, order: &O) -> usize {
        let (mut lo, mut hi) = (0, self.len);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if order.cmp_keys(self.get(mid), key) == Ordering::Greater {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    /// Moves logical slots `[at, len)` into a fresh buffer of the same
    /// geometry.
    pub fn split_off(&mut self, at: usize) -> Result<Self> {
        if at > self.len {
            return Err(Error::RankOutOfBounds { rank: at, len: self.len });
        }
        let mut other = Self::new(self.capacity, self.width)?;
        let w = self.width as usize;
        let count = self.len - at;
        let mut done = 0;
        while done < count {
            let src = self.phys(at + done);
            let chunk = (count - done).min(self.capacity - src);
            bits::copy_between(&self.words, src * w, &mut other.words, done * w, chunk * w);
            done += chunk;
        }
        other.len = count;
        self.len = at;
        if self.len == 0 {
            self.head = 0;
        }
        self.keys_moved += count as u64;
        Ok(other)
    }

    /// Folds the values at logical slots `[lo, hi)`. When the width divides
    /// 64, values are pulled out of whole words lane by lane.
    pub fn fold_range<F: FnMut(u64, u64) -> u64>(&self, lo: usize, hi: usize, init: u64, mut f: F) -> u64 {
        assert!(lo <= hi && hi <= self.len);
        let mut acc = init;
        let w = self.width as usize;
        let lanes_align = 64 % w == 0;
        let mut i = lo;
        while i < hi {
            let start = self.phys(i);
            let chunk = (hi - i).min(self.capacity - start);
            if lanes_align && w < 64 {
                let per_word = 64 / w;
                let m = bits::mask(self.width);
                let mut s = start;
                let end = start + chunk;
                while s < end {
                    let word = self.words[s / per_word];
                    let lane = s % per_word;
                    let take = (per_word - lane).min(end - s);
                    let mut v = word >> (lane * w);
                    for _ in 0..take {
                        acc = f(acc, v & m);
                        v = v.checked_shr(w as u32).unwrap_or(0);
                    }
                    s += take;
                }
            } else {
                for s in start..start + chunk {
                    acc = f(acc, self.read_phys(s));
                }
            }
            i += chunk;
        }
        acc
    }
}

impl PartialEq for PackedKeyBuffer {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.len == other.len && self.iter().eq(other.iter())
    }
}

/// Satellite values paired slot-for-slot with a leaf's keys.
///
/// Only [`crate::leaf::LeafArrays`] mutates it, so its head and length
/// always track the key buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct SatelliteBuffer(pub(crate) PackedKeyBuffer);

impl SatelliteBuffer {
    pub fn new(capacity: usize, value_width: u32) -> Result<Self> {
        PackedKeyBuffer::new(capacity, value_width).map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn value_width(&self) -> u32 {
        self.0.width()
    }

    pub fn get(&self, i: usize) -> u64 {
        self.0.get(i)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = u64> + '_ {
        self.0.iter()
    }

    pub fn fold_range<F: FnMut(u64, u64) -> u64>(&self, lo: usize, hi: usize, init: u64, f: F) -> u64 {
        self.0.fold_range(lo, hi, init, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::Natural;

    fn filled(cap: usize, width: u32, head: usize, keys: &[u64]) -> PackedKeyBuffer {
        let mut b = PackedKeyBuffer::with_head(cap, width, head).unwrap();
        for &k in keys {
            b.push_back(k).unwrap();
        }
        b
    }

    #[test]
    fn insert_nine_between_eight_and_ten() {
        let mut b = filled(4, 5, 0, &[8, 10, 12]);
        b.insert_at(1, 9).unwrap();
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![8, 9, 10, 12]);
        assert!(b.is_full());
        assert_eq!(b.insert_at(0, 1), Err(Error::Full { capacity: 4 }));
    }

    #[test]
    fn insert_into_empty() {
        let mut b = PackedKeyBuffer::new(3, 7).unwrap();
        b.insert_at(0, 42).unwrap();
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![42]);
        assert_eq!(b.insert_at(3, 1), Err(Error::RankOutOfBounds { rank: 3, len: 1 }));
    }

    #[test]
    fn remove_middle_and_ends() {
        let mut b = filled(8, 6, 5, &[8, 9, 10]);
        assert_eq!(b.remove_at(1), Ok(9));
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![8, 10]);
        let moved = b.keys_moved();
        assert_eq!(b.remove_at(0), Ok(8));
        assert_eq!(b.remove_at(0), Ok(10));
        assert_eq!(b.keys_moved(), moved, "end removals move nothing");
        assert_eq!(b.remove_at(0), Err(Error::Empty));
        assert_eq!(b.pop_back(), Err(Error::Empty));
    }

    #[test]
    fn push_and_pop_ends() {
        let mut b = filled(5, 4, 0, &[8, 10]);
        b.push_front(7).unwrap();
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![7, 8, 10]);
        assert_eq!(b.pop_back(), Ok(10));
        assert_eq!(b.keys_moved(), 0);
    }

    #[test]
    fn rotation_identity() {
        let mut b = filled(6, 9, 3, &[1, 2, 3, 4, 5, 6]);
        for _ in 0..6 {
            let k = b.pop_front().unwrap();
            b.push_back(k).unwrap();
        }
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn wraparound_is_transparent() {
        let cap = 11;
        for head in 0..cap {
            let mut b = PackedKeyBuffer::with_head(cap, 13, head).unwrap();
            let mut oracle = Vec::new();
            for k in [5u64, 1, 9, 7, 3] {
                let r = oracle.partition_point(|&x| x <= k);
                oracle.insert(r, k);
                b.insert_at(r, k).unwrap();
            }
            b.push_back(100).unwrap();
            oracle.push(100);
            b.push_front(0).unwrap();
            oracle.insert(0, 0);
            assert_eq!(b.iter().collect::<Vec<_>>(), oracle, "head {head}");
        }
    }

    #[test]
    fn rank_of_counts_less_or_equal() {
        let b = filled(4, 8, 2, &[8, 10, 12]);
        assert_eq!(b.rank_of(9, &Natural), 1);
        assert_eq!(b.rank_of(12, &Natural), 3);
        assert_eq!(b.rank_of(7, &Natural), 0);
    }

    #[test]
    fn rejects_too_wide_keys() {
        let mut b = PackedKeyBuffer::new(4, 3).unwrap();
        assert_eq!(b.push_back(8), Err(Error::KeyTooWide { key: 8, width: 3 }));
    }

    #[test]
    fn split_off_wrapped_buffer() {
        let mut b = filled(7, 10, 5, &[1, 2, 3, 4, 5, 6]);
        let right = b.split_off(2).unwrap();
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(right.iter().collect::<Vec<_>>(), vec![3, 4, 5, 6]);
    }

    #[test]
    fn fold_range_word_lanes() {
        for width in [8u32, 16, 32, 64, 7] {
            let mut b = PackedKeyBuffer::with_head(20, width, 13).unwrap();
            for i in 0..20u64 {
                b.push_back(i * 3 % 101).unwrap();
            }
            for lo in 0..20 {
                for hi in lo..=20 {
                    let expect: u64 = (lo..hi).map(|i| b.get(i)).sum();
                    assert_eq!(b.fold_range(lo, hi, 0, |a, v| a + v), expect);
                }
            }
        }
    }
}
