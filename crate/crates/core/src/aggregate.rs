//! Decomposable aggregates over satellite values.
//!
//! The aggregate of a leaf is not taken over its physical array but over a
//! block: a window of the conceptual global array (all leaf arrays
//! concatenated in key order) described by an offset from the leaf's first
//! slot and a size. Blocks of consecutive leaves tile the global array.
//! Rotations only move a block boundary relative to the leaf boundary, so
//! they never touch a cached aggregate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leaf::KeyStore;
use crate::order::KeyOrder;
use crate::tree::{LeafId, NodeRef, Tree};

/// Built-in decomposable aggregate functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateSpec {
    /// Wrapping sum.
    Sum,
    Min,
    Max,
}

impl AggregateSpec {
    pub fn identity(self) -> u64 {
        match self {
            AggregateSpec::Sum | AggregateSpec::Max => 0,
            AggregateSpec::Min => u64::MAX,
        }
    }

    #[inline]
    pub fn merge(self, a: u64, b: u64) -> u64 {
        match self {
            AggregateSpec::Sum => a.wrapping_add(b),
            AggregateSpec::Min => a.min(b),
            AggregateSpec::Max => a.max(b),
        }
    }

    pub fn eval(self, values: &[u64]) -> u64 {
        values.iter().fold(self.identity(), |a, &v| self.merge(a, v))
    }

    pub fn name(self) -> &'static str {
        match self {
            AggregateSpec::Sum => "sum",
            AggregateSpec::Min => "min",
            AggregateSpec::Max => "max",
        }
    }
}

impl fmt::Display for AggregateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(AggregateSpec::Sum),
            "min" => Ok(AggregateSpec::Min),
            "max" => Ok(AggregateSpec::Max),
            _ => Err(Error::InvalidParams(format!("unknown aggregate {s:?}"))),
        }
    }
}

/// How blocks are kept valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggMode {
    /// Realign the blocks of a whole leaf group to their arrays after a
    /// split or when a block turns invalid.
    Batch,
    /// Repair an invalid block by merging it into a neighbour, shifting
    /// block ownership along the leaf list when needed.
    Merge,
}

impl FromStr for AggMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(AggMode::Batch),
            "merge" => Ok(AggMode::Merge),
            _ => Err(Error::InvalidParams(format!("unknown mode {s:?}"))),
        }
    }
}

/// Window of the global array owned by one leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDescriptor {
    /// Block start minus the leaf's first global slot.
    pub offset: i64,
    pub size: usize,
    pub agg: u64,
}

impl BlockDescriptor {
    pub fn empty(identity: u64) -> Self {
        Self { offset: 0, size: 0, agg: identity }
    }
}

/// Why a block is invalid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockFault {
    Oversize { size: usize, limit: usize },
    OffsetOutOfRange { offset: i64, b: usize },
    EndPastNextLeaf { end: i64, limit: usize },
}

impl fmt::Display for BlockFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockFault::Oversize { size, limit } => write!(f, "size {size} exceeds {limit}"),
            BlockFault::OffsetOutOfRange { offset, b } => write!(f, "offset {offset} outside (-{b}, {b})"),
            BlockFault::EndPastNextLeaf { end, limit } => write!(f, "offset + size = {end} exceeds {limit}"),
        }
    }
}

/// Checks the three validity conditions of a block for leaf capacity `b`.
pub fn validate_block(d: &BlockDescriptor, b: usize) -> std::result::Result<(), BlockFault> {
    let bi = b as i64;
    if d.size > 2 * b {
        return Err(BlockFault::Oversize { size: d.size, limit: 2 * b });
    }
    if d.offset <= -bi || d.offset >= bi {
        return Err(BlockFault::OffsetOutOfRange { offset: d.offset, b });
    }
    if d.offset + d.size as i64 > 2 * bi {
        return Err(BlockFault::EndPastNextLeaf { end: d.offset + d.size as i64, limit: 2 * b });
    }
    Ok(())
}

#[inline]
fn is_valid(offset: i64, size: i64, b: i64) -> bool {
    size <= 2 * b && offset > -b && offset < b && offset + size <= 2 * b
}

/// Block near the one being repaired, in the local frame of that leaf.
#[derive(Debug, Clone, Copy)]
struct Near {
    leaf: LeafId,
    /// Leaf start relative to the repaired leaf's start.
    rel: i64,
    start: i64,
    size: i64,
    agg: u64,
}

/// Lazily collected neighbourhood of the block being repaired; `at(0)` is
/// the block itself.
struct FixWindow {
    left: Vec<Near>,
    right: Vec<Near>,
    limit: usize,
}

impl FixWindow {
    fn at<S: KeyStore, O: KeyOrder>(&mut self, tree: &Tree<S, O>, t: i64) -> Option<Near> {
        let idx = t.unsigned_abs() as usize;
        if idx > self.limit {
            return None;
        }
        let side = if t <= 0 { &mut self.left } else { &mut self.right };
        while side.len() <= idx {
            let last = *side.last().expect("window seeded with its centre");
            let nb = if t <= 0 { tree.prev_leaf(last.leaf) } else { tree.next_leaf(last.leaf) }?;
            let d = tree.leaf(nb).block;
            let rel = if t <= 0 {
                last.rel - tree.leaf_len(nb) as i64
            } else {
                last.rel + tree.leaf_len(last.leaf) as i64
            };
            side.push(Near { leaf: nb, rel, start: rel + d.offset, size: d.size as i64, agg: d.agg });
        }
        Some(side[idx])
    }

    /// Distinct blocks read, the repaired one included.
    fn visited(&self) -> usize {
        self.left.len() + self.right.len() - 1
    }
}

/// A new owner for a run of old block contents.
struct Assign {
    leaf: LeafId,
    rel: i64,
    start: i64,
    size: i64,
    agg: u64,
}

impl<S: KeyStore, O: KeyOrder> Tree<S, O> {
    fn agg_config(&self) -> Result<crate::tree::AggConfig> {
        self.agg.ok_or(Error::AggregatesDisabled)
    }

    /// Block descriptor of a leaf.
    pub fn block(&self, leaf: LeafId) -> BlockDescriptor {
        self.leaf(leaf).block
    }

    pub fn validate_leaf_block(&self, leaf: LeafId) -> std::result::Result<(), BlockFault> {
        validate_block(&self.leaf(leaf).block, self.params.b)
    }

    pub(crate) fn mark_block(&mut self, leaf: LeafId) {
        self.op.dirty_blocks.push(leaf);
    }

    /// Folds the satellite values of `count` global slots starting `start`
    /// slots after the first slot of `leaf` (negative values reach into
    /// preceding leaves).
    pub(crate) fn fold_span(&self, leaf: LeafId, start: i64, count: usize, init: u64, spec: AggregateSpec) -> u64 {
        let mut cur = leaf;
        let mut p = start;
        while p < 0 {
            cur = self.prev_leaf(cur).expect("span starts inside the global array");
            p += self.leaf_len(cur) as i64;
        }
        let mut p = p as usize;
        let mut left = count;
        let mut acc = init;
        while left > 0 {
            let a = &self.leaf(cur).arrays;
            if p < a.len() {
                let take = left.min(a.len() - p);
                acc = match a.values() {
                    Some(v) => v.fold_range(p, p + take, acc, |x, y| spec.merge(x, y)),
                    None => (0..take).fold(acc, |x, _| spec.merge(x, 0)),
                };
                left -= take;
                p = 0;
            } else {
                p -= a.len();
            }
            if left > 0 {
                cur = self.next_leaf(cur).expect("span ends inside the global array");
            }
        }
        acc
    }

    /// Recomputes a block aggregate from its values.
    pub(crate) fn eval_block(&mut self, leaf: LeafId) {
        let Some(cfg) = self.agg else { return };
        let d = self.leaf(leaf).block;
        let agg = self.fold_span(leaf, d.offset, d.size, cfg.spec.identity(), cfg.spec);
        self.leaf_mut(leaf).block.agg = agg;
        self.counters.block_evals += 1;
        self.op.block_evals += 1;
        self.mark_block(leaf);
    }

    /// Block holding local slot `p` of leaf `x`, with its start in `x`'s
    /// frame. With `inclusive`, a block also owns the slot just past its end,
    /// which is where an insertion can land.
    fn block_at(&self, x: LeafId, p: i64, inclusive: bool) -> (LeafId, i64, i32) {
        let mut j = x;
        let mut s = self.leaf(x).block.offset;
        let mut dir = 0;
        loop {
            let size = self.leaf(j).block.size as i64;
            if p < s {
                j = self.prev_leaf(j).expect("slot inside the global array");
                s -= self.leaf(j).block.size as i64;
                dir = -1;
            } else if p > s + size || (!inclusive && p == s + size) {
                s += size;
                j = self.next_leaf(j).expect("slot inside the global array");
                dir = 1;
            } else {
                return (j, s, dir);
            }
        }
    }

    /// Leaf whose block holds slot `i` of leaf `x`.
    pub(crate) fn block_owner(&self, x: LeafId, i: usize) -> LeafId {
        self.block_at(x, i as i64, false).0
    }

    fn shift_offsets(&mut self, from: LeafId, to: LeafId, delta: i64) {
        // leaves after `from` up to and including `to`
        let mut m = from;
        while m != to {
            m = self.next_leaf(m).expect("range inside leaf list");
            self.leaf_mut(m).block.offset += delta;
            self.mark_block(m);
        }
    }

    /// Accounts for a value entering local slot `r` of leaf `x`.
    pub(crate) fn block_insert(&mut self, x: LeafId, r: usize, value: u64) {
        let Some(cfg) = self.agg else { return };
        let (j, _, dir) = self.block_at(x, r as i64, true);
        let d = &mut self.leaf_mut(j).block;
        d.size += 1;
        d.agg = cfg.spec.merge(d.agg, value);
        self.mark_block(j);
        match dir {
            1 => self.shift_offsets(x, j, -1),
            -1 => self.shift_offsets(j, x, 1),
            _ => {}
        }
    }

    /// Shrinks the block owning local slot `r` of leaf `x`, before the slot
    /// is removed. The returned block must be evaluated afterwards.
    pub(crate) fn block_remove(&mut self, x: LeafId, r: usize) -> Option<LeafId> {
        self.agg?;
        let (j, _, dir) = self.block_at(x, r as i64, false);
        self.leaf_mut(j).block.size -= 1;
        self.mark_block(j);
        match dir {
            1 => self.shift_offsets(x, j, 1),
            -1 => self.shift_offsets(j, x, -1),
            _ => {}
        }
        Some(j)
    }

    /// The leaf's first slot moved one position left or right in the
    /// global array (a rotation), while its block stayed put.
    pub(crate) fn block_leaf_moved(&mut self, leaf: LeafId, delta: i64) {
        if self.agg.is_some() {
            self.leaf_mut(leaf).block.offset -= delta;
            self.mark_block(leaf);
        }
    }

    /// `y` was split off `x`, which kept `at` slots: `y` gets the empty block
    /// right after `x`'s.
    pub(crate) fn block_split(&mut self, x: LeafId, y: LeafId, at: usize) {
        let Some(cfg) = self.agg else { return };
        let d = self.leaf(x).block;
        self.leaf_mut(y).block =
            BlockDescriptor { offset: d.offset + d.size as i64 - at as i64, size: 0, agg: cfg.spec.identity() };
        self.leaf_mut(y).block_reset_at = self.counters.inserts;
        self.mark_block(y);
    }

    /// Hands the block of the empty leaf `l` to a neighbour before `l` is
    /// unlinked.
    pub(crate) fn block_leaf_deleted(&mut self, l: LeafId) {
        let Some(cfg) = self.agg else { return };
        let d = self.leaf(l).block;
        if let Some(p) = self.prev_leaf(l) {
            let pb = &mut self.leaf_mut(p).block;
            pb.size += d.size;
            pb.agg = cfg.spec.merge(pb.agg, d.agg);
            self.mark_block(p);
        } else if let Some(n) = self.next_leaf(l) {
            let nb = &mut self.leaf_mut(n).block;
            nb.offset = d.offset;
            nb.size += d.size;
            nb.agg = cfg.spec.merge(d.agg, nb.agg);
            self.mark_block(n);
        }
    }

    /// Makes the blocks of leaves `g0..=g1` coincide with their arrays,
    /// widening the range where a neighbouring block would otherwise be left
    /// with a negative size. Returns the range actually aligned.
    pub(crate) fn align_range(&mut self, mut g0: LeafId, mut g1: LeafId) -> (LeafId, LeafId) {
        while let Some(p) = self.prev_leaf(g0) {
            if self.leaf(p).block.offset >= self.leaf_len(p) as i64 {
                g0 = p;
            } else {
                break;
            }
        }
        while let Some(n) = self.next_leaf(g1) {
            let d = self.leaf(n).block;
            if d.offset + (d.size as i64) < 0 {
                g1 = n;
            } else {
                break;
            }
        }
        if let Some(p) = self.prev_leaf(g0) {
            let d = self.leaf(p).block;
            let size = (self.leaf_len(p) as i64 - d.offset) as usize;
            if size != d.size {
                self.leaf_mut(p).block.size = size;
                self.eval_block(p);
            }
        }
        if let Some(n) = self.next_leaf(g1) {
            let d = self.leaf(n).block;
            if d.offset != 0 {
                let b = &mut self.leaf_mut(n).block;
                b.size = (d.offset + d.size as i64) as usize;
                b.offset = 0;
                self.eval_block(n);
            }
        }
        let now = self.counters.inserts;
        let mut m = g0;
        loop {
            let len = self.leaf_len(m);
            let l = self.leaf_mut(m);
            l.block.offset = 0;
            l.block.size = len;
            l.block_reset_at = now;
            self.eval_block(m);
            if m == g1 {
                break;
            }
            m = self.next_leaf(m).expect("range inside leaf list");
        }
        (g0, g1)
    }

    /// Leaves within `radius` hops of `lo..=hi`, truncated at the ends.
    fn widen(&self, lo: LeafId, hi: LeafId, radius: usize) -> (LeafId, LeafId) {
        let (mut a, mut z) = (lo, hi);
        for _ in 0..radius {
            if let Some(p) = self.prev_leaf(a) {
                a = p;
            }
            if let Some(n) = self.next_leaf(z) {
                z = n;
            }
        }
        (a, z)
    }

    fn record_gap(&mut self, gap: u64) {
        self.counters.rebalance_gaps += 1;
        self.counters.min_rebalance_gap = Some(self.counters.min_rebalance_gap.map_or(gap, |g| g.min(gap)));
    }

    /// Resets the blocks of the leaf group that took part in the split of
    /// `x` into `x` and `y`.
    pub(crate) fn batch_rebalance_split(&mut self, x: LeafId, y: LeafId) {
        let (a, z) = self.widen(x, y, self.params.q.div_ceil(2));
        let (a, z) = self.align_range(a, z);
        let now = self.counters.inserts;
        let mut m = a;
        loop {
            if let Some(t) = self.leaf_mut(m).split_mark.take() {
                self.record_gap(now - t);
            }
            if m == z {
                break;
            }
            m = self.next_leaf(m).expect("range inside leaf list");
        }
        self.leaf_mut(x).split_mark = Some(now);
        self.leaf_mut(y).split_mark = Some(now);
        self.counters.rebalances += 1;
    }

    /// Resets the blocks of `leaf` and its neighbourhood after its block
    /// turned invalid.
    pub(crate) fn batch_rebalance_invalid(&mut self, leaf: LeafId) {
        let gap = self.counters.inserts - self.leaf(leaf).block_reset_at;
        self.record_gap(gap);
        let (a, z) = self.widen(leaf, leaf, self.params.q.div_ceil(2));
        self.align_range(a, z);
        self.counters.rebalances += 1;
    }

    /// Repairs the invalid block of `i` by handing block contents between
    /// neighbours, each new owner taking one old block or the union of two
    /// adjacent ones. Four candidate reassignments are tried; each walks at
    /// most `q` blocks to one side. When none applies (for example a single
    /// block larger than `2b`), the block is recut to its own array.
    pub fn fix_invalid_block(&mut self, i: LeafId) {
        let Some(cfg) = self.agg else { return };
        if self.validate_leaf_block(i).is_ok() {
            return;
        }
        let d = self.leaf(i).block;
        let mut w = FixWindow {
            left: vec![Near { leaf: i, rel: 0, start: d.offset, size: d.size as i64, agg: d.agg }],
            right: vec![Near { leaf: i, rel: 0, start: d.offset, size: d.size as i64, agg: d.agg }],
            limit: self.params.q,
        };
        let plan = self
            .plan_shift(&mut w, -1, cfg.spec)
            .or_else(|| self.plan_shift(&mut w, 1, cfg.spec))
            .or_else(|| self.plan_absorb(&mut w, 1, cfg.spec))
            .or_else(|| self.plan_absorb(&mut w, -1, cfg.spec));
        let visits = w.visited();
        self.counters.fixes += 1;
        self.counters.fix_visits_total += visits as u64;
        self.counters.max_fix_visits = self.counters.max_fix_visits.max(visits);
        match plan {
            Some(assign) => {
                for a in assign {
                    let b = &mut self.leaf_mut(a.leaf).block;
                    b.offset = a.start - a.rel;
                    b.size = a.size as usize;
                    b.agg = a.agg;
                    self.mark_block(a.leaf);
                }
            }
            None => {
                self.counters.fix_fallbacks += 1;
                self.align_range(i, i);
            }
        }
    }

    /// Empties block `i` and shifts contents one block towards `dir`
    /// (`-1`: left), ending with a merge of two adjacent contents.
    fn plan_shift(&self, w: &mut FixWindow, dir: i64, spec: AggregateSpec) -> Option<Vec<Assign>> {
        let b = self.params.b as i64;
        let c = w.at(self, 0)?;
        // emptied at its end when contents move left, at its start otherwise
        let pos = if dir < 0 { c.start + c.size } else { c.start };
        if !is_valid(pos - c.rel, 0, b) {
            return None;
        }
        let mut out = vec![Assign { leaf: c.leaf, rel: c.rel, start: pos, size: 0, agg: spec.identity() }];
        let mut carried = c;
        for s in 1..=self.params.q as i64 {
            let m = w.at(self, dir * s)?;
            let (start, size) = if dir < 0 {
                (m.start, m.size + carried.size)
            } else {
                (carried.start, m.size + carried.size)
            };
            if is_valid(start - m.rel, size, b) {
                let agg = if dir < 0 { spec.merge(m.agg, carried.agg) } else { spec.merge(carried.agg, m.agg) };
                out.push(Assign { leaf: m.leaf, rel: m.rel, start, size, agg });
                return Some(out);
            }
            if !is_valid(carried.start - m.rel, carried.size, b) {
                return None;
            }
            out.push(Assign { leaf: m.leaf, rel: m.rel, start: carried.start, size: carried.size, agg: carried.agg });
            carried = m;
        }
        None
    }

    /// The neighbour on side `dir` absorbs block `i`'s contents; block `i`
    /// then takes the contents of its other neighbour, and so on, until some
    /// block on that side can be left empty.
    fn plan_absorb(&self, w: &mut FixWindow, dir: i64, spec: AggregateSpec) -> Option<Vec<Assign>> {
        let b = self.params.b as i64;
        let c = w.at(self, 0)?;
        let nb = w.at(self, dir)?;
        let (start, size) = if dir > 0 { (c.start, c.size + nb.size) } else { (nb.start, c.size + nb.size) };
        if !is_valid(start - nb.rel, size, b) {
            return None;
        }
        let agg = if dir > 0 { spec.merge(c.agg, nb.agg) } else { spec.merge(nb.agg, c.agg) };
        let mut out = vec![Assign { leaf: nb.leaf, rel: nb.rel, start, size, agg }];
        let mut m = c;
        for s in 1..self.params.q as i64 {
            // left empty where its contents began (or ended)
            let pos = if dir > 0 { m.start } else { m.start + m.size };
            if is_valid(pos - m.rel, 0, b) {
                out.push(Assign { leaf: m.leaf, rel: m.rel, start: pos, size: 0, agg: spec.identity() });
                return Some(out);
            }
            let donor = w.at(self, -dir * s)?;
            if !is_valid(donor.start - m.rel, donor.size, b) {
                return None;
            }
            out.push(Assign { leaf: m.leaf, rel: m.rel, start: donor.start, size: donor.size, agg: donor.agg });
            m = donor;
        }
        None
    }

    /// Restores block validity after an update.
    pub(crate) fn maintain_blocks(&mut self) {
        let Some(cfg) = self.agg else { return };
        if let Some((x, y)) = self.op.split_group.take() {
            if cfg.mode == AggMode::Batch {
                self.batch_rebalance_split(x, y);
            }
        }
        let mut k = 0;
        while k < self.op.dirty_blocks.len() {
            let l = self.op.dirty_blocks[k];
            k += 1;
            if self.leaves[l].is_none() || self.validate_leaf_block(l).is_ok() {
                continue;
            }
            match cfg.mode {
                AggMode::Batch => self.batch_rebalance_invalid(l),
                AggMode::Merge => self.fix_invalid_block(l),
            }
        }
    }

    // ---- queries --------------------------------------------------------

    /// Aggregate cached at a node: a leaf's block aggregate, or the merge over
    /// an internal node's children.
    pub fn access_node(&self, node: NodeRef) -> Result<u64> {
        self.agg_config()?;
        Ok(self.cached_agg(node))
    }

    pub(crate) fn cached_agg(&self, node: NodeRef) -> u64 {
        match node {
            NodeRef::Leaf(l) => self.leaf(l).block.agg,
            NodeRef::Internal(n) => self.node(n).agg,
        }
    }

    /// Aggregate over all satellite values.
    pub fn root_aggregate(&self) -> Result<u64> {
        self.access_node(self.root)
    }

    /// Aggregate over the satellite values of keys in `[lo, hi]`.
    pub fn range_aggregate(&self, lo: u64, hi: u64) -> Result<u64> {
        let cfg = self.agg_config()?;
        if self.order.cmp_keys(lo, hi).is_gt() {
            return Ok(cfg.spec.identity());
        }
        self.range_aggregate_ranks(self.rank_lt(lo), self.rank(hi))
    }

    /// Aggregate over the satellite values at global ranks `[r0, r1)`.
    pub fn range_aggregate_ranks(&self, r0: usize, r1: usize) -> Result<u64> {
        let cfg = self.agg_config()?;
        let spec = cfg.spec;
        let r1 = r1.min(self.len);
        if r0 >= r1 {
            return Ok(spec.identity());
        }
        let (x0, i0) = self.leaf_at_rank(r0);
        let (x1, i1) = self.leaf_at_rank(r1 - 1);
        let (j0, s0, _) = self.block_at(x0, i0 as i64, false);
        let (j1, s1, _) = self.block_at(x1, i1 as i64, false);
        if j0 == j1 {
            return Ok(self.fold_span(x0, i0 as i64, r1 - r0, spec.identity(), spec));
        }
        let end0 = s0 + self.leaf(j0).block.size as i64;
        let mut acc = self.fold_span(x0, i0 as i64, (end0 - i0 as i64) as usize, spec.identity(), spec);
        acc = spec.merge(acc, self.agg_between(j0, j1, spec));
        acc = self.fold_span(x1, s1, (i1 as i64 - s1 + 1) as usize, acc, spec);
        Ok(acc)
    }

    /// Merge of the cached aggregates of the leaves strictly between `a`
    /// and `b` (`a` before `b`), using whole subtrees below their common
    /// ancestor.
    fn agg_between(&self, a: LeafId, b: LeafId, spec: AggregateSpec) -> u64 {
        let mut ca = NodeRef::Leaf(a);
        let mut cb = NodeRef::Leaf(b);
        let mut left = spec.identity();
        let mut right = spec.identity();
        loop {
            let pa = self.parent_of(ca).expect("distinct leaves share an ancestor");
            let pb = self.parent_of(cb).expect("distinct leaves share an ancestor");
            let ia = self.index_in_parent(pa, ca);
            let ib = self.index_in_parent(pb, cb);
            if pa == pb {
                for &c in &self.node(pa).children[ia + 1..ib] {
                    left = spec.merge(left, self.cached_agg(c));
                }
                return spec.merge(left, right);
            }
            for &c in &self.node(pa).children[ia + 1..] {
                left = spec.merge(left, self.cached_agg(c));
            }
            for &c in self.node(pb).children[..ib].iter().rev() {
                right = spec.merge(self.cached_agg(c), right);
            }
            ca = NodeRef::Internal(pa);
            cb = NodeRef::Internal(pb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validity_boundaries() {
        let b = 8;
        let ok = |offset, size| validate_block(&BlockDescriptor { offset, size, agg: 0 }, b).is_ok();
        assert!(!ok(8, 0));
        assert!(ok(0, 0));
        assert!(ok(0, 16));
        assert!(!ok(0, 17));
        assert!(!ok(-8, 1));
        assert!(ok(-7, 16));
        assert!(!ok(7, 10));
        assert!(ok(7, 9));
    }

    #[test]
    fn specs() {
        assert_eq!(AggregateSpec::Min.eval(&[4, 2, 9]), 2);
        assert_eq!(AggregateSpec::Max.eval(&[4, 2, 9]), 9);
        assert_eq!(AggregateSpec::Sum.eval(&[4, 2, 9]), 15);
        assert_eq!(AggregateSpec::Min.eval(&[]), u64::MAX);
        assert_eq!("min".parse::<AggregateSpec>().unwrap(), AggregateSpec::Min);
    }

    /// Overwrites all blocks with a random tiling whose cut points sit near
    /// the leaf starts, then lets the merge fixer repair it.
    #[test]
    fn fix_random_tilings() {
        use crate::tree::TreeParams;
        use rand::{Rng, SeedableRng};

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let b = 6i64;
        let params = TreeParams::for_capacity(1 << 10, 16).with_t(4).with_q(5).with_b(b as usize);
        let mut fixes = 0;
        for round in 0..400 {
            let mut t = Tree::with_aggregate(params, AggregateSpec::Sum, AggMode::Merge).unwrap();
            for k in 0..60u64 {
                let key = rng.gen_range(0..1000);
                if !t.contains(key) {
                    t.insert_with_value(key, k + round).unwrap();
                }
            }
            let ids = t.leaf_ids();
            let starts: Vec<i64> = ids.iter().map(|&l| t.leaf_start(l) as i64).collect();
            let n = t.len() as i64;
            let mut cuts = vec![0i64];
            for &s in &starts[1..] {
                let prev = *cuts.last().unwrap();
                cuts.push((s + rng.gen_range(-b..=b)).clamp(prev, n));
            }
            cuts.push(n);
            t.begin_op();
            for (j, &l) in ids.iter().enumerate() {
                let d = &mut t.leaf_mut(l).block;
                d.offset = cuts[j] - starts[j];
                d.size = (cuts[j + 1] - cuts[j]) as usize;
                t.mark_block(l);
            }
            for &l in &ids {
                let d = t.leaf(l).block;
                let agg = t.fold_span(l, d.offset, d.size, 0, AggregateSpec::Sum);
                t.leaf_mut(l).block.agg = agg;
            }
            let before = t.counters().fixes;
            t.end_op();
            fixes += t.counters().fixes - before;
            t.check_invariants().unwrap();
            assert!(t.counters().max_fix_visits <= 2 * params.q + 2);
        }
        assert!(fixes > 100, "only {fixes} fixes exercised");
    }
}
