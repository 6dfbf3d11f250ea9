//! MSB-first bit streams.
//!
//! Stream bit `i` is stored in word `i / 64` at bit `63 - i % 64`, so the
//! first bit of the stream is the most significant bit of the first word.
//! Multi-bit integers are written most significant bit first.

use crate::bits::mask;
use crate::error::{Error, Result};

#[inline]
fn read_msb(words: &[u64], pos: usize, width: u32) -> u64 {
    if width == 0 {
        return 0;
    }
    let w = pos / 64;
    let off = (pos % 64) as u32;
    let hi = words[w] << off;
    if off + width <= 64 {
        hi >> (64 - width)
    } else {
        (hi | (words[w + 1] >> (64 - off))) >> (64 - width)
    }
}

#[inline]
fn write_msb(words: &mut [u64], pos: usize, width: u32, value: u64) {
    if width == 0 {
        return;
    }
    let v = value & mask(width);
    let w = pos / 64;
    let off = (pos % 64) as u32;
    if off + width <= 64 {
        let shift = 64 - off - width;
        let m = mask(width) << shift;
        words[w] = (words[w] & !m) | (v << shift);
    } else {
        let first = 64 - off;
        let rest = width - first;
        words[w] = (words[w] & !mask(first)) | (v >> rest);
        let shift = 64 - rest;
        let m = mask(rest) << shift;
        words[w + 1] = (words[w + 1] & !m) | ((v & mask(rest)) << shift);
    }
}

/// A growable MSB-first bit array supporting splicing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitStream {
    words: Vec<u64>,
    len: usize,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Allocated capacity in bits.
    pub fn capacity_bits(&self) -> usize {
        self.words.len() * 64
    }

    /// Backing words; bits past `len` are unspecified.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    fn reserve_bits(&mut self, bits: usize) {
        // +1 word so straddling reads at the end stay in bounds
        let need = bits.div_ceil(64) + 1;
        if need > self.words.len() {
            let grown = need.max(self.words.len() * 2);
            self.words.resize(grown, 0);
        }
    }

    fn maybe_shrink(&mut self) {
        let need = self.len.div_ceil(64) + 1;
        if self.words.len() > 8 && need * 4 <= self.words.len() {
            self.words.truncate(self.words.len() / 2);
            self.words.shrink_to(self.words.len());
        }
    }

    pub fn get_bit(&self, pos: usize) -> bool {
        assert!(pos < self.len);
        read_msb(&self.words, pos, 1) == 1
    }

    /// Reads `width` (≤ 64) bits at `pos`; fails past the end of the stream.
    pub fn read(&self, pos: usize, width: u32) -> Result<u64> {
        if pos + width as usize > self.len {
            return Err(Error::Truncated);
        }
        Ok(read_msb(&self.words, pos, width))
    }

    /// Reads up to `width` bits at `pos`, padding with zeros past the end.
    pub(crate) fn peek_padded(&self, pos: usize, width: u32) -> u64 {
        if pos >= self.len {
            return 0;
        }
        let avail = (self.len - pos).min(width as usize) as u32;
        read_msb(&self.words, pos, avail) << (width - avail)
    }

    /// Overwrites `width` bits at `pos` (must lie inside the stream).
    pub fn write(&mut self, pos: usize, width: u32, value: u64) {
        assert!(pos + width as usize <= self.len, "write past end of stream");
        write_msb(&mut self.words, pos, width, value);
    }

    pub fn push(&mut self, width: u32, value: u64) {
        self.reserve_bits(self.len + width as usize);
        write_msb(&mut self.words, self.len, width, value);
        self.len += width as usize;
    }

    fn copy_within(&mut self, src: usize, dst: usize, nbits: usize) {
        if nbits == 0 || src == dst {
            return;
        }
        if dst < src {
            let mut done = 0;
            while done < nbits {
                let chunk = (nbits - done).min(64) as u32;
                let v = read_msb(&self.words, src + done, chunk);
                write_msb(&mut self.words, dst + done, chunk, v);
                done += chunk as usize;
            }
        } else {
            let mut left = nbits;
            while left > 0 {
                let chunk = left.min(64);
                left -= chunk;
                let v = read_msb(&self.words, src + left, chunk as u32);
                write_msb(&mut self.words, dst + left, chunk as u32, v);
            }
        }
    }

    /// Opens a gap of `n` bits at `pos`, moving the tail as a bit block.
    pub fn insert_gap(&mut self, pos: usize, n: usize) {
        assert!(pos <= self.len);
        self.reserve_bits(self.len + n);
        let tail = self.len - pos;
        self.len += n;
        self.copy_within(pos, pos + n, tail);
    }

    /// Removes `n` bits at `pos`, moving the tail as a bit block.
    pub fn remove_range(&mut self, pos: usize, n: usize) {
        assert!(pos + n <= self.len);
        let tail = self.len - pos - n;
        self.copy_within(pos + n, pos, tail);
        self.len -= n;
        self.maybe_shrink();
    }

    /// Replaces `old_len` bits at `pos` with `new_len` bits, keeping the tail.
    pub fn resize_range(&mut self, pos: usize, old_len: usize, new_len: usize) {
        if new_len > old_len {
            self.insert_gap(pos + old_len, new_len - old_len);
        } else if old_len > new_len {
            self.remove_range(pos + new_len, old_len - new_len);
        }
    }

    pub fn truncate(&mut self, len: usize) {
        assert!(len <= self.len);
        self.len = len;
        self.maybe_shrink();
    }

    pub fn clear(&mut self) {
        self.len = 0;
        self.words.clear();
    }

    /// Renders the stream as a string of `0`/`1` characters.
    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.get_bit(i) { '1' } else { '0' }).collect()
    }
}

/// Appends to a [`BitStream`].
#[derive(Debug, Default)]
pub struct BitWriter {
    stream: BitStream,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write_bits(&mut self, width: u32, value: u64) {
        self.stream.push(width, value);
    }

    pub fn write_zeros(&mut self, mut n: usize) {
        while n > 0 {
            let c = n.min(64);
            self.stream.push(c as u32, 0);
            n -= c;
        }
    }

    pub fn bit_len(&self) -> usize {
        self.stream.len()
    }

    pub fn finish(self) -> BitStream {
        self.stream
    }
}

/// Sequential reader over a [`BitStream`].
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    stream: &'a BitStream,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(stream: &'a BitStream) -> Self {
        Self { stream, pos: 0 }
    }

    pub fn at(stream: &'a BitStream, pos: usize) -> Self {
        Self { stream, pos }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.stream.len() - self.pos
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        let v = self.stream.read(self.pos, width)?;
        self.pos += width as usize;
        Ok(v)
    }

    /// Counts and consumes zero bits up to the next one bit (which is left
    /// unread).
    pub fn read_zero_run(&mut self) -> Result<u32> {
        let mut run = 0u32;
        loop {
            if self.pos >= self.stream.len() {
                return Err(Error::Truncated);
            }
            let avail = (self.stream.len() - self.pos).min(64) as u32;
            let chunk = self.stream.read(self.pos, avail)? << (64 - avail);
            let lz = chunk.leading_zeros().min(avail);
            run += lz;
            self.pos += lz as usize;
            if lz < avail {
                return Ok(run);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first_layout() {
        let mut s = BitStream::new();
        s.push(3, 0b101);
        s.push(2, 0b01);
        assert_eq!(s.to_bit_string(), "10101");
        assert_eq!(s.words()[0] >> 59, 0b10101);
    }

    #[test]
    fn splice_keeps_tail() {
        let mut s = BitStream::new();
        for i in 0..100u64 {
            s.push(7, i);
        }
        s.insert_gap(13, 5);
        s.write(13, 5, 0b11111);
        s.remove_range(13, 5);
        for i in 0..100u64 {
            assert_eq!(s.read(i as usize * 7, 7).unwrap(), i);
        }
        assert_eq!(s.read(700, 1), Err(Error::Truncated));
    }

    #[test]
    fn zero_run_across_words() {
        let mut w = BitWriter::new();
        w.write_zeros(130);
        w.write_bits(1, 1);
        let s = w.finish();
        let mut r = BitReader::new(&s);
        assert_eq!(r.read_zero_run().unwrap(), 130);
        assert_eq!(r.read_bits(1).unwrap(), 1);
        assert_eq!(r.read_zero_run(), Err(Error::Truncated));
    }
}
