//! Space accounting and operation counters.

use serde::{Deserialize, Serialize};

use super::Tree;
use crate::leaf::KeyStore;
use crate::order::KeyOrder;
use crate::WORD_BITS;

/// Model-bit accounting of a tree.
///
/// Each leaf is charged for its key storage, its satellite buffer when
/// present, and four header words (two sibling links, a parent link and the
/// head/length pair). Each internal node is charged `t` child links, `t - 1`
/// separators of `k` bits and two words (count and parent link).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    pub n_keys: usize,
    pub n_leaves: usize,
    pub n_internal: usize,
    pub height: usize,
    pub t: usize,
    pub q: usize,
    pub b: usize,
    pub k: u32,
    /// Key storage alone, summed over leaves.
    pub bits_leaf_keys: usize,
    pub bits_leaves: usize,
    pub bits_internal: usize,
    pub bits_total: usize,
    pub occupancy_ratio: f64,
}

/// Instrumentation accumulated since construction or the last reset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub inserts: u64,
    pub deletes: u64,
    /// Keys moved between adjacent leaves.
    pub rotations: u64,
    pub splits: u64,
    pub leaf_deletions: u64,
    /// Full evaluations of a block aggregate.
    pub block_evals: u64,
    pub fixes: u64,
    pub fix_visits_total: u64,
    pub max_fix_visits: usize,
    /// Repairs that found no reassignment and recut the block instead.
    pub fix_fallbacks: u64,
    pub rebalances: u64,
    /// Rebalances for which an insertion gap was measured.
    pub rebalance_gaps: u64,
    /// Fewest insertions seen between two rebalances of the same leaf group.
    pub min_rebalance_gap: Option<u64>,
    /// Most distinct leaves modified by a single operation.
    pub max_leaves_touched: usize,
    /// Most block evaluations within a single operation.
    pub max_evals_per_op: usize,
}

impl<S: KeyStore, O: KeyOrder> Tree<S, O> {
    pub fn stats(&self) -> TreeStats {
        let p = &self.params;
        let mut key_bits = 0;
        let mut value_bits = 0;
        for slot in self.leaves.iter().flatten() {
            key_bits += slot.arrays.keys().key_bits();
            if let Some(v) = slot.arrays.values() {
                value_bits += p.b * v.value_width() as usize;
            }
        }
        let bits_leaves = key_bits + value_bits + self.n_leaves * 4 * WORD_BITS;
        let per_internal = p.t * WORD_BITS + (p.t - 1) * p.k as usize + 2 * WORD_BITS;
        let bits_internal = self.n_internal * per_internal;
        TreeStats {
            n_keys: self.len,
            n_leaves: self.n_leaves,
            n_internal: self.n_internal,
            height: self.height(),
            t: p.t,
            q: p.q,
            b: p.b,
            k: p.k,
            bits_leaf_keys: key_bits,
            bits_leaves,
            bits_internal,
            bits_total: bits_leaves + bits_internal,
            occupancy_ratio: self.len as f64 / (self.n_leaves * p.b) as f64,
        }
    }
}
