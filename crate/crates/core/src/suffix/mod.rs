//! Sparse suffix sorting on top of the tree, and the suffix AVL tree.
//!
//! Positions are 1-based. Suffixes compare in unsigned byte order; on a
//! common prefix the shorter suffix is smaller.

mod index;
mod savl;

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::order::KeyOrder;

pub use index::{SlcpRow, SparseSuffixIndex};
pub use savl::{resolve_lcps, Dir, Resolved, Rule, SavlNode, SavlTree, SlcpTrace};

/// A static text shared by the structures built over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Text {
    bytes: Arc<[u8]>,
}

impl Text {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Self {
        Self { bytes: bytes.into().into() }
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn check_pos(&self, p: usize) -> Result<()> {
        if p == 0 || p > self.len() {
            return Err(Error::PositionOutOfRange { pos: p, len: self.len() });
        }
        Ok(())
    }

    /// `T[p..]`.
    pub fn suffix(&self, p: usize) -> &[u8] {
        &self.bytes[p - 1..]
    }

    /// Longest common prefix of `T[i..]` and `T[j..]`.
    pub fn lcp(&self, i: usize, j: usize) -> usize {
        naive_lcp(self.as_bytes(), i, j)
    }

    /// Compares `T[i..]` and `T[j..]` starting at character offset `skip`,
    /// which both are known to share. Returns the order and the lcp.
    pub fn compare_from(&self, i: usize, j: usize, skip: usize) -> (Ordering, usize) {
        let (a, b) = (self.suffix(i), self.suffix(j));
        let mut l = skip.min(a.len()).min(b.len());
        while l < a.len() && l < b.len() && a[l] == b[l] {
            l += 1;
        }
        let ord = match (a.get(l), b.get(l)) {
            (Some(x), Some(y)) => x.cmp(y),
            _ => a.len().cmp(&b.len()),
        };
        (ord, l)
    }
}

/// Character-by-character lcp of `text[i-1..]` and `text[j-1..]`.
pub fn naive_lcp(text: &[u8], i: usize, j: usize) -> usize {
    text[i - 1..].iter().zip(&text[j - 1..]).take_while(|(a, b)| a == b).count()
}

/// How the suffix order compares two suffixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Comparator {
    /// Slice comparison (memcmp).
    #[default]
    Fast,
    /// Byte loop, the differential baseline.
    Naive,
}

impl std::str::FromStr for Comparator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Comparator::Fast),
            "naive" => Ok(Comparator::Naive),
            _ => Err(Error::InvalidParams(format!("unknown comparator {s:?}"))),
        }
    }
}

/// Orders 1-based positions by the suffixes of a text.
#[derive(Debug, Clone)]
pub struct SuffixOrder {
    text: Text,
    comparator: Comparator,
}

impl SuffixOrder {
    pub fn new(text: Text, comparator: Comparator) -> Self {
        Self { text, comparator }
    }

    pub fn text(&self) -> &Text {
        &self.text
    }
}

impl KeyOrder for SuffixOrder {
    fn cmp_keys(&self, a: u64, b: u64) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        match self.comparator {
            Comparator::Fast => self.text.suffix(a as usize).cmp(self.text.suffix(b as usize)),
            Comparator::Naive => self.text.compare_from(a as usize, b as usize, 0).0,
        }
    }
}
