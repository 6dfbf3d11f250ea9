//! The load-balancing B+ tree.
//!
//! Leaves are circular buffers of capacity `b`. A full leaf that receives a
//! key first looks for a non-full leaf among its neighbours (nearest first,
//! alternating left and right, at most `q - 1` hops away) and rotates one
//! boundary key per intermediate leaf towards it. Only when every leaf in
//! that range is full does the leaf split. Deletions from a full leaf pull a
//! key back from a non-full neighbour the same way, and leaves are removed
//! only once empty. Together this keeps at most two non-full leaves in any
//! `q` consecutive leaves.
//!
//! Internal nodes hold up to `t` children and `t - 1` separators, where
//! separator `i` is the largest key below child `i`. They also count the keys
//! below them and, when aggregates are enabled, cache the aggregate of their
//! children.

mod check;
mod stats;
mod update;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::aggregate::{AggMode, AggregateSpec, BlockDescriptor};
use crate::error::{Error, Result};
use crate::leaf::{KeyStore, LeafArrays};
use crate::order::{KeyOrder, Natural};
use crate::packed::PackedKeyBuffer;
use crate::WORD_BITS;

pub use check::Violation;
pub use stats::{Counters, TreeStats};

pub type LeafId = usize;
pub type NodeId = usize;

/// A node of the tree as seen from outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Leaf(LeafId),
    Internal(NodeId),
}

/// Shape parameters, frozen at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Maximum number of children of an internal node.
    pub t: usize,
    /// Width of the sibling window governing rotations and the fill invariant.
    pub q: usize,
    /// Leaf capacity in keys.
    pub b: usize,
    /// Key width in bits.
    pub k: u32,
    /// Capacity hint the defaults for `q` and `b` were derived from.
    pub n0: u64,
    /// Width of satellite values in bits.
    pub value_width: u32,
}

fn ceil_lg(n: u64) -> usize {
    if n <= 2 {
        1
    } else {
        (n as f64).log2().ceil() as usize
    }
}

impl TreeParams {
    /// Defaults for about `n0` keys of `k` bits: `t = 16`,
    /// `q = max(3, ⌈lg n0⌉)`, `b = ⌈w ⌈lg n0⌉ / k⌉`.
    pub fn for_capacity(n0: u64, k: u32) -> Self {
        let lg = ceil_lg(n0);
        let b = (WORD_BITS * lg).div_ceil(k.max(1) as usize).max(2);
        Self { t: 16, q: lg.max(3), b, k, n0, value_width: k }
    }

    pub fn with_t(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn with_q(mut self, q: usize) -> Self {
        self.q = q;
        self
    }

    pub fn with_b(mut self, b: usize) -> Self {
        self.b = b;
        self
    }

    pub fn with_value_width(mut self, w: u32) -> Self {
        self.value_width = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.t < 3 {
            return bad(format!("t = {} < 3", self.t));
        }
        if self.q < 3 {
            return bad(format!("q = {} < 3", self.q));
        }
        if self.b < 2 {
            return bad(format!("b = {} < 2", self.b));
        }
        if self.k == 0 || self.k as usize > WORD_BITS {
            return bad(format!("k = {} not in 1..=64", self.k));
        }
        if self.value_width == 0 || self.value_width as usize > WORD_BITS {
            return bad(format!("value width {} not in 1..=64", self.value_width));
        }
        Ok(())
    }

    /// Smallest number of children of a non-root internal node.
    pub fn min_degree(&self) -> usize {
        self.t.div_ceil(2)
    }
}

impl Default for TreeParams {
    fn default() -> Self {
        Self::for_capacity(1 << 20, 32)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LeafNode<S> {
    pub(crate) arrays: LeafArrays<S>,
    pub(crate) prev: Option<LeafId>,
    pub(crate) next: Option<LeafId>,
    pub(crate) parent: Option<NodeId>,
    pub(crate) block: BlockDescriptor,
    /// Insert count when this leaf came out of a split whose group was
    /// rebalanced.
    pub(crate) split_mark: Option<u64>,
    /// Insert count when this leaf's block was last aligned to its array.
    pub(crate) block_reset_at: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct InternalNode {
    pub(crate) children: Vec<NodeRef>,
    pub(crate) seps: Vec<u64>,
    pub(crate) count: usize,
    pub(crate) agg: u64,
    pub(crate) parent: Option<NodeId>,
    /// 1 for parents of leaves.
    pub(crate) height: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct AggConfig {
    pub(crate) spec: AggregateSpec,
    pub(crate) mode: AggMode,
}

/// Per-operation scratch state.
#[derive(Debug, Default, Clone)]
pub(crate) struct OpScratch {
    pub(crate) touched: Vec<LeafId>,
    pub(crate) dirty_blocks: Vec<LeafId>,
    pub(crate) dirty_nodes: Vec<NodeId>,
    pub(crate) split_group: Option<(LeafId, LeafId)>,
    pub(crate) block_evals: usize,
}

/// The load-balancing B+ tree over `k`-bit keys.
#[derive(Debug, Clone)]
pub struct Tree<S: KeyStore = PackedKeyBuffer, O: KeyOrder = Natural> {
    pub(crate) params: TreeParams,
    pub(crate) order: O,
    pub(crate) leaves: Vec<Option<LeafNode<S>>>,
    free_leaves: Vec<LeafId>,
    pub(crate) nodes: Vec<Option<InternalNode>>,
    free_nodes: Vec<NodeId>,
    pub(crate) root: NodeRef,
    pub(crate) first_leaf: LeafId,
    pub(crate) len: usize,
    pub(crate) n_leaves: usize,
    pub(crate) n_internal: usize,
    pub(crate) satellites: bool,
    pub(crate) agg: Option<AggConfig>,
    pub(crate) counters: Counters,
    pub(crate) op: OpScratch,
}

impl Tree {
    /// An empty tree over integer keys without satellite values.
    pub fn new(params: TreeParams) -> Result<Self> {
        Self::build(params, Natural, false, None)
    }

    /// An empty tree over integer keys carrying satellite values aggregated
    /// with `spec`.
    pub fn with_aggregate(params: TreeParams, spec: AggregateSpec, mode: AggMode) -> Result<Self> {
        Self::build(params, Natural, true, Some((spec, mode)))
    }
}

impl<S: KeyStore, O: KeyOrder> Tree<S, O> {
    /// General constructor: leaf store `S`, key order `order`, optional
    /// satellite values and aggregate.
    pub fn build(
        params: TreeParams,
        order: O,
        satellites: bool,
        aggregate: Option<(AggregateSpec, AggMode)>,
    ) -> Result<Self> {
        params.validate()?;
        let satellites = satellites || aggregate.is_some();
        let agg = aggregate.map(|(spec, mode)| AggConfig { spec, mode });
        let identity = agg.map_or(0, |a| a.spec.identity());
        let root_leaf = LeafNode {
            arrays: LeafArrays::new(params.b, params.k, satellites.then_some(params.value_width))?,
            prev: None,
            next: None,
            parent: None,
            block: BlockDescriptor::empty(identity),
            split_mark: None,
            block_reset_at: 0,
        };
        Ok(Self {
            params,
            order,
            leaves: vec![Some(root_leaf)],
            free_leaves: Vec::new(),
            nodes: Vec::new(),
            free_nodes: Vec::new(),
            root: NodeRef::Leaf(0),
            first_leaf: 0,
            len: 0,
            n_leaves: 1,
            n_internal: 0,
            satellites,
            agg,
            counters: Counters::default(),
            op: OpScratch::default(),
        })
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn order(&self) -> &O {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn reset_counters(&mut self) {
        self.counters = Counters::default();
    }

    pub fn has_satellites(&self) -> bool {
        self.satellites
    }

    pub fn aggregate_spec(&self) -> Option<AggregateSpec> {
        self.agg.map(|a| a.spec)
    }

    pub fn aggregate_mode(&self) -> Option<AggMode> {
        self.agg.map(|a| a.mode)
    }

    pub fn root(&self) -> NodeRef {
        self.root
    }

    /// Number of levels, counting the leaf level.
    pub fn height(&self) -> usize {
        match self.root {
            NodeRef::Leaf(_) => 1,
            NodeRef::Internal(n) => self.node(n).height + 1,
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    // ---- arena access -------------------------------------------------

    #[inline]
    pub(crate) fn leaf(&self, id: LeafId) -> &LeafNode<S> {
        self.leaves[id].as_ref().expect("live leaf")
    }

    #[inline]
    pub(crate) fn leaf_mut(&mut self, id: LeafId) -> &mut LeafNode<S> {
        self.leaves[id].as_mut().expect("live leaf")
    }

    #[inline]
    pub(crate) fn node(&self, id: NodeId) -> &InternalNode {
        self.nodes[id].as_ref().expect("live node")
    }

    #[inline]
    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut InternalNode {
        self.nodes[id].as_mut().expect("live node")
    }

    pub(crate) fn alloc_leaf(&mut self, leaf: LeafNode<S>) -> LeafId {
        self.n_leaves += 1;
        match self.free_leaves.pop() {
            Some(id) => {
                self.leaves[id] = Some(leaf);
                id
            }
            None => {
                self.leaves.push(Some(leaf));
                self.leaves.len() - 1
            }
        }
    }

    pub(crate) fn free_leaf(&mut self, id: LeafId) {
        self.leaves[id] = None;
        self.free_leaves.push(id);
        self.n_leaves -= 1;
    }

    pub(crate) fn alloc_node(&mut self, node: InternalNode) -> NodeId {
        self.n_internal += 1;
        match self.free_nodes.pop() {
            Some(id) => {
                self.nodes[id] = Some(node);
                id
            }
            None => {
                self.nodes.push(Some(node));
                self.nodes.len() - 1
            }
        }
    }

    pub(crate) fn free_node(&mut self, id: NodeId) {
        self.nodes[id] = None;
        self.free_nodes.push(id);
        self.n_internal -= 1;
    }

    pub(crate) fn parent_of(&self, c: NodeRef) -> Option<NodeId> {
        match c {
            NodeRef::Leaf(l) => self.leaf(l).parent,
            NodeRef::Internal(n) => self.node(n).parent,
        }
    }

    pub(crate) fn set_parent(&mut self, c: NodeRef, p: Option<NodeId>) {
        match c {
            NodeRef::Leaf(l) => self.leaf_mut(l).parent = p,
            NodeRef::Internal(n) => self.node_mut(n).parent = p,
        }
    }

    /// Number of keys stored below `c`.
    pub(crate) fn child_len(&self, c: NodeRef) -> usize {
        match c {
            NodeRef::Leaf(l) => self.leaf(l).arrays.len(),
            NodeRef::Internal(n) => self.node(n).count,
        }
    }

    pub(crate) fn index_in_parent(&self, p: NodeId, c: NodeRef) -> usize {
        self.node(p).children.iter().position(|&x| x == c).expect("child linked to parent")
    }

    pub(crate) fn leaf_len(&self, id: LeafId) -> usize {
        self.leaf(id).arrays.len()
    }

    pub(crate) fn next_leaf(&self, id: LeafId) -> Option<LeafId> {
        self.leaf(id).next
    }

    pub(crate) fn prev_leaf(&self, id: LeafId) -> Option<LeafId> {
        self.leaf(id).prev
    }

    /// Leaf ids in key order.
    pub fn leaf_ids(&self) -> Vec<LeafId> {
        let mut out = Vec::with_capacity(self.n_leaves);
        let mut cur = Some(self.first_leaf);
        while let Some(l) = cur {
            out.push(l);
            cur = self.leaf(l).next;
        }
        out
    }

    /// Keys of one leaf, in order.
    pub fn leaf_keys(&self, id: LeafId) -> Vec<u64> {
        self.leaf(id).arrays.keys().to_vec()
    }

    pub fn leaf_is_full(&self, id: LeafId) -> bool {
        self.leaf(id).arrays.is_full()
    }

    // ---- navigation ---------------------------------------------------

    #[inline]
    fn cmp(&self, a: u64, b: u64) -> Ordering {
        self.order.cmp_keys(a, b)
    }

    /// Child index for `key`: the first child whose largest key is `>= key`
    /// (`> key` when `past_equal`), else the last child.
    #[inline]
    fn route(&self, node: &InternalNode, key: u64, past_equal: bool) -> usize {
        node.seps.partition_point(|&s| match self.cmp(key, s) {
            Ordering::Greater => true,
            Ordering::Equal => past_equal,
            Ordering::Less => false,
        })
    }

    /// Leaf reached for `key`; with `count`, also the number of keys in
    /// leaves before it.
    fn descend(&self, key: u64, past_equal: bool, count: bool, mut path: Option<&mut Vec<NodeId>>) -> (LeafId, usize) {
        let mut cur = self.root;
        let mut before = 0;
        loop {
            match cur {
                NodeRef::Leaf(l) => return (l, before),
                NodeRef::Internal(n) => {
                    if let Some(p) = path.as_deref_mut() {
                        p.push(n);
                    }
                    let node = self.node(n);
                    let i = self.route(node, key, past_equal);
                    if count {
                        before += node.children[..i].iter().map(|&c| self.child_len(c)).sum::<usize>();
                    }
                    cur = node.children[i];
                }
            }
        }
    }

    /// The leaf whose key range admits `key`, plus the root-to-leaf path of
    /// internal nodes.
    pub fn locate_leaf(&self, key: u64) -> (LeafId, Vec<NodeId>) {
        let mut path = Vec::with_capacity(self.height());
        let (l, _) = self.descend(key, false, false, Some(&mut path));
        (l, path)
    }

    pub(crate) fn find_leaf(&self, key: u64) -> LeafId {
        self.descend(key, false, false, None).0
    }

    /// Largest stored key `<= key`.
    pub fn predecessor(&self, key: u64) -> Option<u64> {
        let l = self.find_leaf(key);
        let leaf = self.leaf(l);
        let r = leaf.arrays.keys().rank_of(key, &self.order);
        if r > 0 {
            Some(leaf.arrays.key(r - 1))
        } else {
            leaf.prev.and_then(|p| self.leaf(p).arrays.keys().last())
        }
    }

    /// Smallest stored key `>= key`.
    pub fn successor(&self, key: u64) -> Option<u64> {
        let r = self.rank_lt(key);
        (r < self.len).then(|| self.select(r))
    }

    pub fn contains(&self, key: u64) -> bool {
        self.predecessor(key).is_some_and(|p| self.cmp(p, key) == Ordering::Equal)
    }

    /// Number of stored keys `<= key`.
    pub fn rank(&self, key: u64) -> usize {
        let (l, before) = self.descend(key, true, true, None);
        before + self.leaf(l).arrays.keys().rank_of(key, &self.order)
    }

    /// Number of stored keys `< key`.
    pub fn rank_lt(&self, key: u64) -> usize {
        let (l, before) = self.descend(key, false, true, None);
        before + self.leaf(l).arrays.keys().rank_lt_of(key, &self.order)
    }

    /// Leaf and slot holding the key of global rank `r` (0-based).
    pub(crate) fn leaf_at_rank(&self, mut r: usize) -> (LeafId, usize) {
        assert!(r < self.len, "rank {r} out of bounds for {} keys", self.len);
        let mut cur = self.root;
        loop {
            match cur {
                NodeRef::Leaf(l) => return (l, r),
                NodeRef::Internal(n) => {
                    let node = self.node(n);
                    let mut next = *node.children.last().expect("nonempty node");
                    for &c in &node.children {
                        let cl = self.child_len(c);
                        if r < cl {
                            next = c;
                            break;
                        }
                        r -= cl;
                    }
                    cur = next;
                }
            }
        }
    }

    /// Key of global rank `r` (0-based).
    pub fn select(&self, r: usize) -> u64 {
        let (l, i) = self.leaf_at_rank(r);
        self.leaf(l).arrays.key(i)
    }

    /// Number of keys stored before leaf `id`.
    pub fn leaf_start(&self, id: LeafId) -> usize {
        let mut before = 0;
        let mut c = NodeRef::Leaf(id);
        while let Some(p) = self.parent_of(c) {
            let node = self.node(p);
            for &s in &node.children {
                if s == c {
                    break;
                }
                before += self.child_len(s);
            }
            c = NodeRef::Internal(p);
        }
        before
    }

    /// All keys in order.
    pub fn keys(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.len);
        for l in self.leaf_ids() {
            out.extend(self.leaf(l).arrays.keys().to_vec());
        }
        out
    }

    /// All satellite values in key order (zeros without satellites).
    pub fn values(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.len);
        for l in self.leaf_ids() {
            let a = &self.leaf(l).arrays;
            out.extend((0..a.len()).map(|i| a.value(i)));
        }
        out
    }

    /// Children of an internal node.
    pub fn children(&self, node: NodeRef) -> Vec<NodeRef> {
        match node {
            NodeRef::Leaf(_) => Vec::new(),
            NodeRef::Internal(n) => self.node(n).children.clone(),
        }
    }

    /// Corrupts a separator so invariant checking has something to find.
    /// Returns false when the tree has no internal node.
    #[doc(hidden)]
    pub fn inject_separator_fault(&mut self) -> bool {
        match self.root {
            NodeRef::Internal(n) => {
                let node = self.node_mut(n);
                node.seps[0] = node.seps[0].wrapping_add(1);
                true
            }
            NodeRef::Leaf(_) => false,
        }
    }
}
