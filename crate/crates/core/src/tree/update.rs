//! Insertion, deletion and the structural maintenance behind them.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::{InternalNode, LeafId, LeafNode, NodeId, NodeRef, Tree};
use crate::aggregate::BlockDescriptor;
use crate::error::{Error, Result};
use crate::leaf::KeyStore;
use crate::order::KeyOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

impl<S: KeyStore, O: KeyOrder> Tree<S, O> {
    fn check_width(&self, key: u64, width: u32) -> Result<()> {
        if width < 64 && key >> width != 0 {
            return Err(Error::KeyTooWide { key, width });
        }
        Ok(())
    }

    /// Leaf and slot of one stored occurrence of `key`.
    fn find_slot(&self, key: u64) -> Result<(LeafId, usize)> {
        let x = self.find_leaf(key);
        let a = &self.leaf(x).arrays;
        let r = a.keys().rank_of(key, &self.order);
        if r == 0 || self.order.cmp_keys(a.key(r - 1), key) != Ordering::Equal {
            return Err(Error::NotFound);
        }
        Ok((x, r - 1))
    }

    pub fn insert(&mut self, key: u64) -> Result<()> {
        self.insert_with_value(key, 0)
    }

    /// Inserts `key` paired with satellite `value` (ignored without
    /// satellites).
    pub fn insert_with_value(&mut self, key: u64, value: u64) -> Result<()> {
        self.check_width(key, self.params.k)?;
        if self.satellites {
            self.check_width(value, self.params.value_width)?;
        }
        let x = self.find_leaf(key);
        let a = &self.leaf(x).arrays;
        let r = a.keys().rank_of(key, &self.order);
        if !S::allows_duplicates() && r > 0 && self.order.cmp_keys(a.key(r - 1), key) == Ordering::Equal {
            return Err(Error::Duplicate);
        }
        self.begin_op();
        self.counters.inserts += 1;
        if !self.leaf(x).arrays.is_full() {
            self.place(x, r, key, value);
        } else if let Some((side, chain)) = self.find_nonfull(x) {
            self.rotate_insert(x, r, key, value, side, &chain);
        } else {
            self.split_insert(x, r, key, value);
        }
        self.len += 1;
        self.end_op();
        Ok(())
    }

    pub fn delete(&mut self, key: u64) -> Result<()> {
        self.delete_with_value(key).map(|_| ())
    }

    /// Removes one occurrence of `key`, returning its satellite value.
    pub fn delete_with_value(&mut self, key: u64) -> Result<u64> {
        let (x, i) = self.find_slot(key)?;
        self.begin_op();
        self.counters.deletes += 1;
        let was_full = self.leaf(x).arrays.is_full();
        let value = self.remove_slot(x, i);
        if was_full {
            if let Some((side, chain)) = self.find_nonfull(x) {
                // keep x full by pulling one key along the chain
                for &g in &chain {
                    match side {
                        Side::Right => self.move_front_to_prev(g),
                        Side::Left => self.move_back_to_next(g),
                    }
                }
                let far = *chain.last().expect("nonempty chain");
                if self.leaf_len(far) == 0 {
                    self.delete_leaf(far);
                }
            }
        } else if self.leaf_len(x) == 0 && self.n_leaves > 1 {
            self.delete_leaf(x);
        }
        self.len -= 1;
        self.end_op();
        Ok(value)
    }

    /// Satellite value of a stored key (0 without satellites).
    pub fn access_key(&self, key: u64) -> Result<u64> {
        let (x, i) = self.find_slot(key)?;
        Ok(self.leaf(x).arrays.value(i))
    }

    /// Replaces the satellite value of a stored key.
    pub fn set_value(&mut self, key: u64, value: u64) -> Result<()> {
        let (x, i) = self.find_slot(key)?;
        if !self.satellites {
            return Err(Error::AggregatesDisabled);
        }
        self.check_width(value, self.params.value_width)?;
        self.begin_op();
        self.leaf_mut(x).arrays.set_value(i, value);
        if self.agg.is_some() {
            let j = self.block_owner(x, i);
            self.eval_block(j);
        }
        self.end_op();
        Ok(())
    }

    // ---- leaf-level steps -----------------------------------------------

    fn touch(&mut self, l: LeafId) {
        self.op.touched.push(l);
    }

    fn add_count(&mut self, c: NodeRef, delta: isize) {
        let mut cur = self.parent_of(c);
        while let Some(p) = cur {
            let n = self.node_mut(p);
            n.count = n.count.checked_add_signed(delta).expect("count stays nonnegative");
            cur = n.parent;
        }
    }

    /// One key moved from leaf `from` to the adjacent leaf `to`.
    fn transfer_count(&mut self, from: LeafId, to: LeafId) {
        let mut a = self.leaf(from).parent;
        let mut b = self.leaf(to).parent;
        while a != b {
            let (pa, pb) = (a.expect("leaves at equal depth"), b.expect("leaves at equal depth"));
            self.node_mut(pa).count -= 1;
            self.node_mut(pb).count += 1;
            a = self.node(pa).parent;
            b = self.node(pb).parent;
        }
    }

    /// Writes `m` as the maximum of `c` into the first ancestor where `c`'s
    /// subtree is not the last child.
    fn propagate_max(&mut self, c: NodeRef, m: u64) {
        let mut c = c;
        while let Some(p) = self.parent_of(c) {
            let idx = self.index_in_parent(p, c);
            let node = self.node_mut(p);
            if idx < node.seps.len() {
                node.seps[idx] = m;
                return;
            }
            c = NodeRef::Internal(p);
        }
    }

    fn refresh_max(&mut self, l: LeafId) {
        if let Some(m) = self.leaf(l).arrays.keys().last() {
            self.propagate_max(NodeRef::Leaf(l), m);
        }
    }

    /// Inserts into a non-full leaf.
    fn place(&mut self, x: LeafId, r: usize, key: u64, value: u64) {
        self.block_insert(x, r, value);
        self.leaf_mut(x).arrays.insert_at(r, key, value).expect("leaf has room");
        self.add_count(NodeRef::Leaf(x), 1);
        if r + 1 == self.leaf_len(x) {
            self.refresh_max(x);
        }
        self.touch(x);
    }

    fn remove_slot(&mut self, x: LeafId, i: usize) -> u64 {
        let owner = self.block_remove(x, i);
        let (_, value) = self.leaf_mut(x).arrays.remove_at(i).expect("slot exists");
        self.add_count(NodeRef::Leaf(x), -1);
        if i == self.leaf_len(x) {
            self.refresh_max(x);
        }
        if let Some(j) = owner {
            self.eval_block(j);
        }
        self.touch(x);
        value
    }

    fn move_back_to_next(&mut self, a: LeafId) {
        let n = self.next_leaf(a).expect("rotation target exists");
        let (k, v) = self.leaf_mut(a).arrays.pop_back().expect("donor nonempty");
        self.leaf_mut(n).arrays.push_front(k, v).expect("receiver has room");
        self.transfer_count(a, n);
        self.refresh_max(a);
        if self.leaf_len(n) == 1 {
            self.refresh_max(n);
        }
        self.block_leaf_moved(n, -1);
        self.counters.rotations += 1;
        self.touch(a);
        self.touch(n);
    }

    fn move_front_to_prev(&mut self, a: LeafId) {
        let p = self.prev_leaf(a).expect("rotation target exists");
        let (k, v) = self.leaf_mut(a).arrays.pop_front().expect("donor nonempty");
        self.leaf_mut(p).arrays.push_back(k, v).expect("receiver has room");
        self.transfer_count(a, p);
        self.refresh_max(p);
        self.block_leaf_moved(a, 1);
        self.counters.rotations += 1;
        self.touch(a);
        self.touch(p);
    }

    /// Nearest non-full leaf at most `q - 1` hops from `x`, checking right
    /// before left at equal distance; returns the leaves from `x`'s
    /// neighbour up to it.
    fn find_nonfull(&self, x: LeafId) -> Option<(Side, Vec<LeafId>)> {
        let mut right = Some(x);
        let mut left = Some(x);
        let mut rchain = Vec::new();
        let mut lchain = Vec::new();
        for _ in 1..self.params.q {
            right = right.and_then(|l| self.next_leaf(l));
            if let Some(c) = right {
                rchain.push(c);
                if !self.leaf(c).arrays.is_full() {
                    return Some((Side::Right, rchain));
                }
            }
            left = left.and_then(|l| self.prev_leaf(l));
            if let Some(c) = left {
                lchain.push(c);
                if !self.leaf(c).arrays.is_full() {
                    return Some((Side::Left, lchain));
                }
            }
            if right.is_none() && left.is_none() {
                break;
            }
        }
        None
    }

    /// Full leaf `x` receives `key` at slot `r`: every leaf of the chain
    /// hands its boundary key on towards the non-full end.
    fn rotate_insert(&mut self, x: LeafId, r: usize, key: u64, value: u64, side: Side, chain: &[LeafId]) {
        match side {
            Side::Right => {
                for j in (0..chain.len() - 1).rev() {
                    self.move_back_to_next(chain[j]);
                }
                if r == self.leaf_len(x) {
                    self.place(chain[0], 0, key, value);
                } else {
                    self.move_back_to_next(x);
                    self.place(x, r, key, value);
                }
            }
            Side::Left => {
                for j in (0..chain.len() - 1).rev() {
                    self.move_front_to_prev(chain[j]);
                }
                if r == 0 {
                    let at = self.leaf_len(chain[0]);
                    self.place(chain[0], at, key, value);
                } else {
                    self.move_front_to_prev(x);
                    self.place(x, r - 1, key, value);
                }
            }
        }
    }

    /// Splits full leaf `x`: the left half keeps `⌈b/2⌉` keys and the right
    /// half `⌊b/2⌋ + 1`, the new key included.
    fn split_insert(&mut self, x: LeafId, r: usize, key: u64, value: u64) {
        let half = self.params.b.div_ceil(2);
        let at = if r < half { half - 1 } else { half };
        let tail = self.leaf_mut(x).arrays.split_off(at).expect("split point inside leaf");
        let next = self.leaf(x).next;
        let identity = self.agg.map_or(0, |a| a.spec.identity());
        let y = self.alloc_leaf(LeafNode {
            arrays: tail,
            prev: Some(x),
            next,
            parent: None,
            block: BlockDescriptor::empty(identity),
            split_mark: None,
            block_reset_at: self.counters.inserts,
        });
        if let Some(n) = next {
            self.leaf_mut(n).prev = Some(y);
        }
        self.leaf_mut(x).next = Some(y);
        self.block_split(x, y, at);
        let max_x = self.leaf(x).arrays.keys().last().unwrap_or(key);
        self.attach_after(NodeRef::Leaf(x), NodeRef::Leaf(y), max_x);
        if r < half {
            self.place(x, r, key, value);
        } else {
            self.place(y, r - at, key, value);
        }
        self.op.split_group = Some((x, y));
        self.counters.splits += 1;
        self.touch(x);
        self.touch(y);
    }

    // ---- internal nodes -------------------------------------------------

    fn mark_node(&mut self, n: NodeId) {
        self.op.dirty_nodes.push(n);
    }

    /// Links `nc` as the right sibling of `c`, whose maximum is `max_c`.
    fn attach_after(&mut self, c: NodeRef, nc: NodeRef, max_c: u64) {
        match self.parent_of(c) {
            None => {
                let height = match c {
                    NodeRef::Leaf(_) => 1,
                    NodeRef::Internal(n) => self.node(n).height + 1,
                };
                let count = self.child_len(c) + self.child_len(nc);
                let identity = self.agg.map_or(0, |a| a.spec.identity());
                let root = self.alloc_node(InternalNode {
                    children: vec![c, nc],
                    seps: vec![max_c],
                    count,
                    agg: identity,
                    parent: None,
                    height,
                });
                self.set_parent(c, Some(root));
                self.set_parent(nc, Some(root));
                self.root = NodeRef::Internal(root);
                self.mark_node(root);
            }
            Some(p) => {
                let idx = self.index_in_parent(p, c);
                let node = self.node_mut(p);
                node.children.insert(idx + 1, nc);
                node.seps.insert(idx, max_c);
                self.set_parent(nc, Some(p));
                self.mark_node(p);
                if self.node(p).children.len() > self.params.t {
                    self.split_internal(p);
                }
            }
        }
    }

    fn split_internal(&mut self, p: NodeId) {
        let n = self.node(p).children.len();
        let lc = n.div_ceil(2);
        let node = self.node_mut(p);
        let children = node.children.split_off(lc);
        let mut seps = node.seps.split_off(lc - 1);
        let promoted = seps.remove(0);
        let (parent, height) = (node.parent, node.height);
        let count: usize = children.iter().map(|&c| self.child_len(c)).sum();
        self.node_mut(p).count -= count;
        let identity = self.agg.map_or(0, |a| a.spec.identity());
        let q = self.alloc_node(InternalNode { children, seps, count, agg: identity, parent, height });
        for i in 0..self.node(q).children.len() {
            let c = self.node(q).children[i];
            self.set_parent(c, Some(q));
        }
        self.mark_node(p);
        self.mark_node(q);
        self.attach_after(NodeRef::Internal(p), NodeRef::Internal(q), promoted);
    }

    /// Unlinks the empty leaf `l` and rebalances upwards.
    fn delete_leaf(&mut self, l: LeafId) {
        self.block_leaf_deleted(l);
        let LeafNode { prev, next, parent, .. } = *self.leaf(l);
        match prev {
            Some(p) => self.leaf_mut(p).next = next,
            None => self.first_leaf = next.expect("not the only leaf"),
        }
        if let Some(n) = next {
            self.leaf_mut(n).prev = prev;
        }
        let p = parent.expect("non-root leaf");
        let idx = self.index_in_parent(p, NodeRef::Leaf(l));
        let node = self.node_mut(p);
        node.children.remove(idx);
        if idx < node.seps.len() {
            node.seps.remove(idx);
        } else {
            let m = node.seps.pop().expect("parent had two children");
            self.propagate_max(NodeRef::Internal(p), m);
        }
        self.free_leaf(l);
        self.counters.leaf_deletions += 1;
        self.rebalance_internal(p);
    }

    fn rebalance_internal(&mut self, mut p: NodeId) {
        let min = self.params.min_degree();
        loop {
            self.mark_node(p);
            let nc = self.node(p).children.len();
            let Some(g) = self.node(p).parent else {
                if nc == 1 {
                    let c = self.node(p).children[0];
                    self.set_parent(c, None);
                    self.root = c;
                    self.free_node(p);
                }
                return;
            };
            if nc >= min {
                return;
            }
            self.mark_node(g);
            let idx = self.index_in_parent(g, NodeRef::Internal(p));
            let sib = |t: &Self, i: usize| match t.node(g).children.get(i) {
                Some(&NodeRef::Internal(s)) => Some(s),
                _ => None,
            };
            let ls = if idx > 0 { sib(self, idx - 1) } else { None };
            let rs = sib(self, idx + 1);
            if let Some(ls) = ls.filter(|&s| self.node(s).children.len() > min) {
                self.borrow_left(p, ls, g, idx);
                return;
            }
            if let Some(rs) = rs.filter(|&s| self.node(s).children.len() > min) {
                self.borrow_right(p, rs, g, idx);
                return;
            }
            match ls {
                Some(ls) => self.merge_nodes(ls, p, g, idx - 1),
                None => self.merge_nodes(p, rs.expect("a sibling exists"), g, idx),
            }
            p = g;
        }
    }

    fn borrow_left(&mut self, p: NodeId, ls: NodeId, g: NodeId, idx: usize) {
        let left = self.node_mut(ls);
        let c = left.children.pop().expect("sibling above minimum");
        let new_max = left.seps.pop().expect("sibling above minimum");
        let max_c = std::mem::replace(&mut self.node_mut(g).seps[idx - 1], new_max);
        let node = self.node_mut(p);
        node.children.insert(0, c);
        node.seps.insert(0, max_c);
        let cnt = self.child_len(c);
        self.node_mut(ls).count -= cnt;
        self.node_mut(p).count += cnt;
        self.set_parent(c, Some(p));
        self.mark_node(ls);
    }

    fn borrow_right(&mut self, p: NodeId, rs: NodeId, g: NodeId, idx: usize) {
        let right = self.node_mut(rs);
        let c = right.children.remove(0);
        let max_c = right.seps.remove(0);
        let old_max = std::mem::replace(&mut self.node_mut(g).seps[idx], max_c);
        let node = self.node_mut(p);
        node.seps.push(old_max);
        node.children.push(c);
        let cnt = self.child_len(c);
        self.node_mut(rs).count -= cnt;
        self.node_mut(p).count += cnt;
        self.set_parent(c, Some(p));
        self.mark_node(rs);
    }

    /// Appends node `b` to its left sibling `a`, which sits at index `ia`
    /// of `g`.
    fn merge_nodes(&mut self, a: NodeId, b: NodeId, g: NodeId, ia: usize) {
        let sep = self.node(g).seps[ia];
        let InternalNode { children, seps, count, .. } = self.nodes[b].take().expect("live node");
        for &c in &children {
            self.set_parent(c, Some(a));
        }
        let node = self.node_mut(a);
        node.seps.push(sep);
        node.seps.extend(seps);
        node.children.extend(children);
        node.count += count;
        let gn = self.node_mut(g);
        gn.children.remove(ia + 1);
        gn.seps.remove(ia);
        self.free_node(b);
        self.mark_node(a);
    }

    // ---- operation bracketing ---------------------------------------------

    pub(crate) fn begin_op(&mut self) {
        let op = &mut self.op;
        op.touched.clear();
        op.dirty_blocks.clear();
        op.dirty_nodes.clear();
        op.split_group = None;
        op.block_evals = 0;
    }

    pub(crate) fn end_op(&mut self) {
        if self.agg.is_some() {
            self.maintain_blocks();
            self.refresh_aggregates();
        }
        let touched = &mut self.op.touched;
        touched.sort_unstable();
        touched.dedup();
        let c = &mut self.counters;
        c.max_leaves_touched = c.max_leaves_touched.max(touched.len());
        c.max_evals_per_op = c.max_evals_per_op.max(self.op.block_evals);
    }

    /// Recomputes cached aggregates of internal nodes above changed blocks
    /// and restructured nodes, lowest first.
    fn refresh_aggregates(&mut self) {
        let Some(cfg) = self.agg else { return };
        let mut todo = BTreeSet::new();
        for i in 0..self.op.dirty_blocks.len() {
            let l = self.op.dirty_blocks[i];
            if let Some(Some(leaf)) = self.leaves.get(l) {
                if let Some(p) = leaf.parent {
                    todo.insert((self.node(p).height, p));
                }
            }
        }
        for i in 0..self.op.dirty_nodes.len() {
            let n = self.op.dirty_nodes[i];
            if let Some(Some(node)) = self.nodes.get(n) {
                todo.insert((node.height, n));
            }
        }
        while let Some((h, n)) = todo.pop_first() {
            let Some(Some(node)) = self.nodes.get(n) else { continue };
            if node.height != h {
                continue;
            }
            let agg = node.children.iter().fold(cfg.spec.identity(), |a, &c| cfg.spec.merge(a, self.cached_agg(c)));
            let node = self.node_mut(n);
            node.agg = agg;
            if let Some(p) = node.parent {
                todo.insert((h + 1, p));
            }
        }
    }
}
