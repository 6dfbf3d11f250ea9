//! Word-level bit manipulation over `u64` slices.
//!
//! Bit `i` of a slice lives in word `i / 64` at bit position `i % 64`
//! (little-endian within words). Reads and writes of up to 64 bits may
//! straddle a word boundary.

#[inline]
pub(crate) fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Reads `width` (≤ 64) bits starting at bit `pos`.
#[inline]
pub(crate) fn read(words: &[u64], pos: usize, width: u32) -> u64 {
    if width == 0 {
        return 0;
    }
    let w = pos / 64;
    let off = (pos % 64) as u32;
    let lo = words[w] >> off;
    if off + width <= 64 {
        lo & mask(width)
    } else {
        (lo | (words[w + 1] << (64 - off))) & mask(width)
    }
}

/// Writes the low `width` (≤ 64) bits of `value` at bit `pos`.
#[inline]
pub(crate) fn write(words: &mut [u64], pos: usize, width: u32, value: u64) {
    if width == 0 {
        return;
    }
    let value = value & mask(width);
    let w = pos / 64;
    let off = (pos % 64) as u32;
    if off + width <= 64 {
        let m = mask(width) << off;
        words[w] = (words[w] & !m) | (value << off);
    } else {
        let lo_bits = 64 - off;
        let m = mask(lo_bits) << off;
        words[w] = (words[w] & !m) | (value << off);
        let hi_bits = width - lo_bits;
        let m = mask(hi_bits);
        words[w + 1] = (words[w + 1] & !m) | (value >> lo_bits);
    }
}

/// Copies `nbits` bits from `src` to `dst` within one slice; the ranges may
/// overlap. Moves 64 bits per step.
pub(crate) fn copy_within(words: &mut [u64], src: usize, dst: usize, nbits: usize) {
    if nbits == 0 || src == dst {
        return;
    }
    if dst < src {
        let mut done = 0;
        while done < nbits {
            let chunk = (nbits - done).min(64) as u32;
            let v = read(words, src + done, chunk);
            write(words, dst + done, chunk, v);
            done += chunk as usize;
        }
    } else {
        let mut left = nbits;
        while left > 0 {
            let chunk = left.min(64);
            left -= chunk;
            let v = read(words, src + left, chunk as u32);
            write(words, dst + left, chunk as u32, v);
        }
    }
}

/// Copies `nbits` bits between two distinct slices.
pub(crate) fn copy_between(src: &[u64], src_pos: usize, dst: &mut [u64], dst_pos: usize, nbits: usize) {
    let mut done = 0;
    while done < nbits {
        let chunk = (nbits - done).min(64) as u32;
        let v = read(src, src_pos + done, chunk);
        write(dst, dst_pos + done, chunk, v);
        done += chunk as usize;
    }
}

pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}
