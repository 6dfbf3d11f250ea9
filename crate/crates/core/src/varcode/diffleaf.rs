use std::marker::PhantomData;

use super::codes::{GapCode, CHUNK_BITS};
use super::stream::{BitReader, BitStream, BitWriter};
use crate::error::{Error, Result};
use crate::leaf::KeyStore;
use crate::order::KeyOrder;

/// A leaf holding strictly increasing integer keys as a plain first key
/// followed by coded gaps `K_i - K_{i-1}`.
///
/// Stream layout (MSB-first): `k` bits of the first key, then one code per
/// subsequent key. The stream length is always `k + Σ codelen(gap)`.
#[derive(Clone, Debug)]
pub struct DiffLeaf<C: GapCode> {
    stream: BitStream,
    key_width: u32,
    capacity: usize,
    count: usize,
    _code: PhantomData<C>,
}

/// Position of the code for key `idx` together with the key before it.
#[derive(Debug, Clone, Copy)]
struct Cursor {
    pos: usize,
    prev_key: u64,
}

impl<C: GapCode> DiffLeaf<C> {
    pub fn new(capacity: usize, key_width: u32) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParams("leaf capacity must be positive".into()));
        }
        if key_width == 0 || key_width > 64 {
            return Err(Error::InvalidParams(format!("key width {key_width} not in 1..=64")));
        }
        Ok(Self { stream: BitStream::new(), key_width, capacity, count: 0, _code: PhantomData })
    }

    pub fn from_sorted(capacity: usize, key_width: u32, keys: &[u64]) -> Result<Self> {
        let mut leaf = Self::new(capacity, key_width)?;
        for &k in keys {
            leaf.insert_at(leaf.count, k)?;
        }
        Ok(leaf)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Exact number of stored bits.
    pub fn bits(&self) -> usize {
        self.stream.len()
    }

    pub fn stream(&self) -> &BitStream {
        &self.stream
    }

    fn first_key(&self) -> u64 {
        self.stream.read(0, self.key_width).expect("nonempty leaf")
    }

    fn decode_at(&self, pos: usize) -> (u64, usize) {
        let mut r = BitReader::at(&self.stream, pos);
        let g = C::decode(&mut r).expect("well-formed stream");
        (g, r.position())
    }

    /// Cursor at the code of key `idx` (1 ≤ idx ≤ count); `idx == count`
    /// yields the end of the stream.
    fn seek(&self, idx: usize) -> Cursor {
        debug_assert!(idx >= 1 && idx <= self.count);
        let mut key = self.first_key();
        let mut pos = self.key_width as usize;
        let mut seen = 1;
        let table = C::chunk_table();
        while seen < idx {
            if let Some(t) = table {
                if self.stream.len() - pos >= CHUNK_BITS as usize {
                    let e = t.lookup(self.stream.peek_padded(pos, CHUNK_BITS) as u16);
                    if e.count > 0 && seen + (e.count as usize) <= idx {
                        key += e.sum as u64;
                        pos += e.consumed as usize;
                        seen += e.count as usize;
                        continue;
                    }
                }
            }
            let (g, next) = self.decode_at(pos);
            key += g;
            pos = next;
            seen += 1;
        }
        Cursor { pos, prev_key: key }
    }

    pub fn get(&self, i: usize) -> u64 {
        assert!(i < self.count, "slot {i} out of bounds for length {}", self.count);
        if i == 0 {
            return self.first_key();
        }
        let c = self.seek(i);
        c.prev_key + self.decode_at(c.pos).0
    }

    pub fn iter(&self) -> DiffIter<'_, C> {
        DiffIter { leaf: self, pos: 0, next_idx: 0, key: 0 }
    }

    /// Count of stored keys `<= key`, decoding sequentially and skipping
    /// whole 16-bit chunks through the decode table where possible.
    pub fn search(&self, key: u64) -> usize {
        if self.count == 0 {
            return 0;
        }
        let mut cur = self.first_key();
        if cur > key {
            return 0;
        }
        let mut rank = 1;
        let mut pos = self.key_width as usize;
        let table = C::chunk_table();
        while rank < self.count {
            if let Some(t) = table {
                if self.stream.len() - pos >= CHUNK_BITS as usize {
                    let e = t.lookup(self.stream.peek_padded(pos, CHUNK_BITS) as u16);
                    if e.count > 0 && cur.checked_add(e.sum as u64).is_some_and(|s| s <= key) {
                        cur += e.sum as u64;
                        pos += e.consumed as usize;
                        rank += e.count as usize;
                        continue;
                    }
                }
            }
            let (g, next) = self.decode_at(pos);
            match cur.checked_add(g) {
                Some(k) if k <= key => {
                    cur = k;
                    pos = next;
                    rank += 1;
                }
                _ => break,
            }
        }
        rank
    }

    /// Writes the codes for `gaps` over `old_len` bits at `pos`.
    fn splice_codes(&mut self, pos: usize, old_len: usize, gaps: &[u64]) {
        let mut w = BitWriter::new();
        for &g in gaps {
            C::encode(&mut w, g);
        }
        let codes = w.finish();
        self.stream.resize_range(pos, old_len, codes.len());
        let mut done = 0;
        while done < codes.len() {
            let chunk = (codes.len() - done).min(64) as u32;
            let v = codes.read(done, chunk).expect("in bounds");
            self.stream.write(pos + done, chunk, v);
            done += chunk as usize;
        }
    }

    fn check_width(&self, key: u64) -> Result<()> {
        if self.key_width < 64 && key >> self.key_width != 0 {
            return Err(Error::KeyTooWide { key, width: self.key_width });
        }
        Ok(())
    }

    /// Inserts `key` at `rank`; the key must lie strictly between its
    /// neighbours. Only the successor's gap is rewritten; the tail moves as
    /// a bit block.
    pub fn insert_at(&mut self, rank: usize, key: u64) -> Result<()> {
        if self.count == self.capacity {
            return Err(Error::Full { capacity: self.capacity });
        }
        if rank > self.count {
            return Err(Error::RankOutOfBounds { rank, len: self.count });
        }
        self.check_width(key)?;
        if self.count == 0 {
            self.stream.push(self.key_width, key);
        } else if rank == 0 {
            let first = self.first_key();
            if key >= first {
                return Err(if key == first { Error::Duplicate } else { Error::RankOutOfBounds { rank, len: self.count } });
            }
            self.stream.write(0, self.key_width, key);
            self.splice_codes(self.key_width as usize, 0, &[first - key]);
        } else {
            let c = self.seek(rank);
            if key <= c.prev_key {
                return Err(if key == c.prev_key { Error::Duplicate } else { Error::RankOutOfBounds { rank, len: self.count } });
            }
            if rank == self.count {
                let at = self.stream.len();
                self.splice_codes(at, 0, &[key - c.prev_key]);
            } else {
                let (g, next) = self.decode_at(c.pos);
                let succ = c.prev_key + g;
                if key >= succ {
                    return Err(if key == succ { Error::Duplicate } else { Error::RankOutOfBounds { rank, len: self.count } });
                }
                self.splice_codes(c.pos, next - c.pos, &[key - c.prev_key, succ - key]);
            }
        }
        self.count += 1;
        Ok(())
    }

    /// Removes the key at `rank`, fusing the two adjacent gaps.
    pub fn remove_at(&mut self, rank: usize) -> Result<u64> {
        if self.count == 0 {
            return Err(Error::Empty);
        }
        if rank >= self.count {
            return Err(Error::RankOutOfBounds { rank, len: self.count });
        }
        let removed;
        if self.count == 1 {
            removed = self.first_key();
            self.stream.clear();
        } else if rank == 0 {
            removed = self.first_key();
            let kw = self.key_width as usize;
            let (g, next) = self.decode_at(kw);
            self.stream.write(0, self.key_width, removed + g);
            self.stream.remove_range(kw, next - kw);
        } else {
            let c = self.seek(rank);
            let (g, next) = self.decode_at(c.pos);
            removed = c.prev_key + g;
            if rank == self.count - 1 {
                self.stream.truncate(c.pos);
            } else {
                let (g2, after) = self.decode_at(next);
                self.splice_codes(c.pos, after - c.pos, &[g + g2]);
            }
        }
        self.count -= 1;
        Ok(removed)
    }

    /// Moves keys `[at, len)` into a new leaf.
    pub fn split_off(&mut self, at: usize) -> Result<Self> {
        if at > self.count {
            return Err(Error::RankOutOfBounds { rank: at, len: self.count });
        }
        let tail: Vec<u64> = self.iter().skip(at).collect();
        if at == 0 {
            self.stream.clear();
        } else if at < self.count {
            let c = self.seek(at);
            self.stream.truncate(c.pos);
        }
        self.count = at;
        Self::from_sorted(self.capacity, self.key_width, &tail)
    }

    /// Recomputes `k + Σ codelen(gap)` from the decoded keys.
    pub fn expected_bits(&self) -> usize {
        let keys: Vec<u64> = self.iter().collect();
        match keys.first() {
            None => 0,
            Some(_) => self.key_width as usize + keys.windows(2).map(|w| C::code_len(w[1] - w[0])).sum::<usize>(),
        }
    }
}

pub struct DiffIter<'a, C: GapCode> {
    leaf: &'a DiffLeaf<C>,
    pos: usize,
    next_idx: usize,
    key: u64,
}

impl<C: GapCode> Iterator for DiffIter<'_, C> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.next_idx >= self.leaf.count {
            return None;
        }
        if self.next_idx == 0 {
            self.key = self.leaf.first_key();
            self.pos = self.leaf.key_width as usize;
        } else {
            let (g, next) = self.leaf.decode_at(self.pos);
            self.key += g;
            self.pos = next;
        }
        self.next_idx += 1;
        Some(self.key)
    }
}

impl<C: GapCode> KeyStore for DiffLeaf<C> {
    fn with_capacity(capacity: usize, width: u32) -> Result<Self> {
        Self::new(capacity, width)
    }

    fn len(&self) -> usize {
        self.count
    }

    fn capacity(&self) -> usize {
        self.capacity
    }

    fn get(&self, i: usize) -> u64 {
        DiffLeaf::get(self, i)
    }

    fn insert_at(&mut self, rank: usize, key: u64) -> Result<()> {
        DiffLeaf::insert_at(self, rank, key)
    }

    fn remove_at(&mut self, rank: usize) -> Result<u64> {
        DiffLeaf::remove_at(self, rank)
    }

    fn rank_of<O: KeyOrder>(&self, key: u64, order: &O) -> usize {
        debug_assert!(order.is_natural(), "difference-coded leaves need integer order");
        self.search(key)
    }

    fn rank_lt_of<O: KeyOrder>(&self, key: u64, order: &O) -> usize {
        debug_assert!(order.is_natural(), "difference-coded leaves need integer order");
        key.checked_sub(1).map_or(0, |k| self.search(k))
    }

    fn split_off(&mut self, at: usize) -> Result<Self> {
        DiffLeaf::split_off(self, at)
    }

    fn key_bits(&self) -> usize {
        self.bits()
    }

    fn allows_duplicates() -> bool {
        false
    }

    fn last(&self) -> Option<u64> {
        self.iter().last()
    }

    fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varcode::{Delta, Gamma};

    #[test]
    fn search_examples() {
        let leaf = DiffLeaf::<Gamma>::from_sorted(8, 8, &[10, 12, 19]).unwrap();
        assert_eq!(leaf.search(12), 2);
        assert_eq!(leaf.search(9), 0);
        assert_eq!(leaf.search(100), 3);
    }

    #[test]
    fn insert_splits_gap_and_remove_fuses() {
        let mut leaf = DiffLeaf::<Gamma>::from_sorted(8, 8, &[10, 20]).unwrap();
        assert_eq!(leaf.bits(), 8 + 7);
        leaf.insert_at(1, 15).unwrap();
        assert_eq!(leaf.iter().collect::<Vec<_>>(), vec![10, 15, 20]);
        assert_eq!(leaf.bits(), 8 + 5 + 5);
        assert_eq!(leaf.remove_at(1), Ok(15));
        assert_eq!(leaf.bits(), 8 + 7);
    }

    #[test]
    fn bits_of_small_leaves() {
        let leaf = DiffLeaf::<Gamma>::from_sorted(8, 32, &[77]).unwrap();
        assert_eq!(leaf.bits(), 32);
        let leaf = DiffLeaf::<Gamma>::from_sorted(8, 32, &[10, 11, 12]).unwrap();
        assert_eq!(leaf.bits(), 34);
        let leaf = DiffLeaf::<Delta>::from_sorted(8, 32, &[10, 11, 12]).unwrap();
        assert_eq!(leaf.bits(), 34);
    }

    #[test]
    fn duplicate_and_misplaced_inserts_are_rejected() {
        let mut leaf = DiffLeaf::<Gamma>::from_sorted(8, 8, &[10, 20]).unwrap();
        assert_eq!(leaf.insert_at(1, 10), Err(Error::Duplicate));
        assert_eq!(leaf.insert_at(0, 10), Err(Error::Duplicate));
        assert_eq!(leaf.insert_at(2, 20), Err(Error::Duplicate));
        assert!(leaf.insert_at(1, 25).is_err());
        assert_eq!(leaf.iter().collect::<Vec<_>>(), vec![10, 20]);
    }

    #[test]
    fn front_and_back_edits() {
        let mut leaf = DiffLeaf::<Delta>::from_sorted(8, 16, &[100, 200, 300]).unwrap();
        leaf.insert_at(0, 50).unwrap();
        assert_eq!(leaf.remove_at(3), Ok(300));
        assert_eq!(leaf.remove_at(0), Ok(50));
        assert_eq!(leaf.iter().collect::<Vec<_>>(), vec![100, 200]);
        assert_eq!(leaf.bits(), leaf.expected_bits());
        let right = leaf.split_off(1).unwrap();
        assert_eq!(right.iter().collect::<Vec<_>>(), vec![200]);
        assert_eq!(leaf.iter().collect::<Vec<_>>(), vec![100]);
    }
}
