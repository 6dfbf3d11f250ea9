//! Elias γ and δ codes for positive integers.
//!
//! γ(x): ⌊lg x⌋ zeros followed by the ⌊lg x⌋ + 1 bit binary form of x.
//! δ(x): γ(⌊lg x⌋ + 1) followed by the low ⌊lg x⌋ bits of x.

use std::sync::OnceLock;

use super::stream::{BitReader, BitStream, BitWriter};
use crate::error::{Error, Result};

#[inline]
fn floor_lg(x: u64) -> u32 {
    63 - x.leading_zeros()
}

pub fn gamma_len(x: u64) -> usize {
    assert!(x >= 1, "Elias codes do not handle 0");
    2 * floor_lg(x) as usize + 1
}

pub fn delta_len(x: u64) -> usize {
    assert!(x >= 1, "Elias codes do not handle 0");
    let n = floor_lg(x);
    gamma_len(n as u64 + 1) + n as usize
}

pub fn gamma_encode(w: &mut BitWriter, x: u64) {
    assert!(x >= 1, "Elias codes do not handle 0");
    let n = floor_lg(x);
    w.write_zeros(n as usize);
    w.write_bits(n + 1, x);
}

pub fn gamma_decode(r: &mut BitReader<'_>) -> Result<u64> {
    let n = r.read_zero_run()?;
    if n > 63 {
        return Err(Error::Truncated);
    }
    r.read_bits(n + 1)
}

pub fn delta_encode(w: &mut BitWriter, x: u64) {
    assert!(x >= 1, "Elias codes do not handle 0");
    let n = floor_lg(x);
    gamma_encode(w, n as u64 + 1);
    w.write_bits(n, x);
}

pub fn delta_decode(r: &mut BitReader<'_>) -> Result<u64> {
    let n = gamma_decode(r)? - 1;
    if n > 63 {
        return Err(Error::Truncated);
    }
    let low = r.read_bits(n as u32)?;
    Ok((1u64 << n) | low)
}

/// A universal code usable for gaps in a [`super::DiffLeaf`].
pub trait GapCode: Clone + Copy + std::fmt::Debug + Default + Send + Sync + 'static {
    const NAME: &'static str;
    fn encode(w: &mut BitWriter, x: u64);
    fn decode(r: &mut BitReader<'_>) -> Result<u64>;
    fn code_len(x: u64) -> usize;
    /// Chunk decode table, when the code has one.
    fn chunk_table() -> Option<&'static ChunkTable> {
        None
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Gamma;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Delta;

impl GapCode for Gamma {
    const NAME: &'static str = "gamma";

    fn encode(w: &mut BitWriter, x: u64) {
        gamma_encode(w, x)
    }

    fn decode(r: &mut BitReader<'_>) -> Result<u64> {
        gamma_decode(r)
    }

    fn code_len(x: u64) -> usize {
        gamma_len(x)
    }

    fn chunk_table() -> Option<&'static ChunkTable> {
        Some(ChunkTable::gamma())
    }
}

impl GapCode for Delta {
    const NAME: &'static str = "delta";

    fn encode(w: &mut BitWriter, x: u64) {
        delta_encode(w, x)
    }

    fn decode(r: &mut BitReader<'_>) -> Result<u64> {
        delta_decode(r)
    }

    fn code_len(x: u64) -> usize {
        delta_len(x)
    }
}

pub const CHUNK_BITS: u32 = 16;

/// Summary of the complete codes at the front of a 16-bit chunk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChunkEntry {
    /// Number of complete codes that fit in the chunk.
    pub count: u8,
    /// Bits taken by those codes; a code straddling the chunk end is left
    /// for the caller.
    pub consumed: u8,
    /// Sum of the decoded values.
    pub sum: u16,
}

/// Decode table indexed by the next 16 stream bits.
pub struct ChunkTable {
    entries: Vec<ChunkEntry>,
}

impl ChunkTable {
    pub fn gamma() -> &'static ChunkTable {
        static TABLE: OnceLock<ChunkTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let entries = (0..1u32 << CHUNK_BITS)
                .map(|chunk| {
                    let mut e = ChunkEntry::default();
                    let mut pos = 0u32;
                    while pos < CHUNK_BITS {
                        let rest = ((chunk << pos) & 0xFFFF) as u16;
                        if rest == 0 {
                            break;
                        }
                        let len = 2 * rest.leading_zeros() + 1;
                        if len > CHUNK_BITS - pos {
                            break;
                        }
                        e.count += 1;
                        e.sum += rest >> (16 - len);
                        pos += len;
                    }
                    e.consumed = pos as u8;
                    e
                })
                .collect();
            ChunkTable { entries }
        })
    }

    #[inline]
    pub fn lookup(&self, chunk: u16) -> ChunkEntry {
        self.entries[chunk as usize]
    }
}

/// Encodes a single value into a fresh stream (handy for fixtures).
pub fn encode_to_stream<C: GapCode>(x: u64) -> BitStream {
    let mut w = BitWriter::new();
    C::encode(&mut w, x);
    w.finish()
}
