//! Structural invariant checking.

use std::cmp::Ordering;
use std::fmt;

use super::{LeafId, NodeId, NodeRef, Tree};
use crate::aggregate::BlockFault;
use crate::leaf::KeyStore;
use crate::order::KeyOrder;

/// First broken invariant found by [`Tree::check_invariants`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnsortedLeaf { leaf: LeafId, slot: usize },
    UnsortedAcrossLeaves { leaf: LeafId },
    EmptyLeaf { leaf: LeafId },
    SeparatorMismatch { node: NodeId, index: usize, stored: u64, actual: u64 },
    SeparatorCount { node: NodeId, seps: usize, children: usize },
    CountMismatch { node: NodeId, stored: usize, actual: usize },
    Degree { node: NodeId, children: usize },
    Height { node: NodeId },
    LeafDepth { leaf: LeafId, depth: usize, expected: usize },
    ParentLink { child: NodeRef },
    LeafLinks { leaf: LeafId },
    Length { stored: usize, actual: usize },
    WindowOverfull { first: usize, non_full: usize },
    InvalidBlock { leaf: LeafId, fault: BlockFault },
    Tiling { leaf: LeafId, start: i64, expected: i64 },
    StaleBlockAggregate { leaf: LeafId, cached: u64, actual: u64 },
    StaleNodeAggregate { node: NodeId, cached: u64, actual: u64 },
}

impl Violation {
    /// Short stable name of the broken invariant.
    pub fn name(&self) -> &'static str {
        use Violation::*;
        match self {
            UnsortedLeaf { .. } => "unsorted-leaf",
            UnsortedAcrossLeaves { .. } => "unsorted-across-leaves",
            EmptyLeaf { .. } => "empty-leaf",
            SeparatorMismatch { .. } => "separator-mismatch",
            SeparatorCount { .. } => "separator-count",
            CountMismatch { .. } => "count-mismatch",
            Degree { .. } => "degree",
            Height { .. } => "height",
            LeafDepth { .. } => "leaf-depth",
            ParentLink { .. } => "parent-link",
            LeafLinks { .. } => "leaf-links",
            Length { .. } => "length",
            WindowOverfull { .. } => "window-overfull",
            InvalidBlock { .. } => "invalid-block",
            Tiling { .. } => "tiling",
            StaleBlockAggregate { .. } => "stale-block-aggregate",
            StaleNodeAggregate { .. } => "stale-node-aggregate",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            UnsortedLeaf { leaf, slot } => write!(f, "leaf {leaf}: keys out of order at slot {slot}"),
            UnsortedAcrossLeaves { leaf } => write!(f, "leaf {leaf}: first key below predecessor leaf's last key"),
            EmptyLeaf { leaf } => write!(f, "leaf {leaf}: empty non-root leaf"),
            SeparatorMismatch { node, index, stored, actual } => {
                write!(f, "node {node}: separator {index} is {stored}, child maximum is {actual}")
            }
            SeparatorCount { node, seps, children } => {
                write!(f, "node {node}: {seps} separators for {children} children")
            }
            CountMismatch { node, stored, actual } => write!(f, "node {node}: count {stored}, subtree holds {actual}"),
            Degree { node, children } => write!(f, "node {node}: {children} children out of bounds"),
            Height { node } => write!(f, "node {node}: height field disagrees with its children"),
            LeafDepth { leaf, depth, expected } => write!(f, "leaf {leaf} at depth {depth}, expected {expected}"),
            ParentLink { child } => write!(f, "{child:?}: parent link does not match"),
            LeafLinks { leaf } => write!(f, "leaf {leaf}: sibling links disagree with tree order"),
            Length { stored, actual } => write!(f, "length {stored}, tree holds {actual}"),
            WindowOverfull { first, non_full } => {
                write!(f, "window starting at leaf #{first} has {non_full} non-full leaves")
            }
            InvalidBlock { leaf, fault } => write!(f, "leaf {leaf}: invalid block ({fault})"),
            Tiling { leaf, start, expected } => write!(f, "leaf {leaf}: block starts at {start}, expected {expected}"),
            StaleBlockAggregate { leaf, cached, actual } => {
                write!(f, "leaf {leaf}: block aggregate {cached}, values give {actual}")
            }
            StaleNodeAggregate { node, cached, actual } => {
                write!(f, "node {node}: aggregate {cached}, children give {actual}")
            }
        }
    }
}

impl std::error::Error for Violation {}

type Check<T> = std::result::Result<T, Violation>;

struct Walk {
    leaves: Vec<LeafId>,
    leaf_depth: Option<usize>,
}

impl<S: KeyStore, O: KeyOrder> Tree<S, O> {
    /// Verifies ordering, separators, counts, shape, leaf links, the fill
    /// window and, with aggregates, block validity, tiling and cached
    /// aggregates.
    pub fn check_invariants(&self) -> Check<()> {
        let mut walk = Walk { leaves: Vec::with_capacity(self.n_leaves), leaf_depth: None };
        if self.parent_of(self.root).is_some() {
            return Err(Violation::ParentLink { child: self.root });
        }
        let (count, _) = self.check_subtree(self.root, 0, &mut walk)?;
        if count != self.len {
            return Err(Violation::Length { stored: self.len, actual: count });
        }
        self.check_links(&walk.leaves)?;
        self.check_window_invariant()?;
        if self.agg.is_some() {
            self.check_blocks(&walk.leaves)?;
        }
        Ok(())
    }

    fn check_subtree(&self, c: NodeRef, depth: usize, walk: &mut Walk) -> Check<(usize, Option<u64>)> {
        match c {
            NodeRef::Leaf(l) => {
                let a = &self.leaf(l).arrays;
                if a.is_empty() && self.root != c {
                    return Err(Violation::EmptyLeaf { leaf: l });
                }
                for i in 1..a.len() {
                    if self.order.cmp_keys(a.key(i - 1), a.key(i)) == Ordering::Greater {
                        return Err(Violation::UnsortedLeaf { leaf: l, slot: i });
                    }
                }
                match walk.leaf_depth {
                    None => walk.leaf_depth = Some(depth),
                    Some(d) if d != depth => return Err(Violation::LeafDepth { leaf: l, depth, expected: d }),
                    _ => {}
                }
                walk.leaves.push(l);
                Ok((a.len(), a.keys().last()))
            }
            NodeRef::Internal(n) => {
                let node = self.node(n);
                let nc = node.children.len();
                let is_root = self.root == c;
                if nc > self.params.t || nc < 2 || (!is_root && nc < self.params.min_degree()) {
                    return Err(Violation::Degree { node: n, children: nc });
                }
                if node.seps.len() + 1 != nc {
                    return Err(Violation::SeparatorCount { node: n, seps: node.seps.len(), children: nc });
                }
                let mut total = 0;
                let mut max = None;
                for (i, &ch) in node.children.iter().enumerate() {
                    if self.parent_of(ch) != Some(n) {
                        return Err(Violation::ParentLink { child: ch });
                    }
                    let child_height = match ch {
                        NodeRef::Leaf(_) => 0,
                        NodeRef::Internal(m) => self.node(m).height,
                    };
                    if child_height + 1 != node.height {
                        return Err(Violation::Height { node: n });
                    }
                    let (cnt, cmax) = self.check_subtree(ch, depth + 1, walk)?;
                    total += cnt;
                    if i < node.seps.len() {
                        let actual = cmax.expect("nonempty subtree");
                        if node.seps[i] != actual {
                            return Err(Violation::SeparatorMismatch {
                                node: n,
                                index: i,
                                stored: node.seps[i],
                                actual,
                            });
                        }
                    }
                    max = cmax;
                }
                if total != node.count {
                    return Err(Violation::CountMismatch { node: n, stored: node.count, actual: total });
                }
                if let Some(cfg) = self.agg {
                    let actual =
                        node.children.iter().fold(cfg.spec.identity(), |a, &ch| cfg.spec.merge(a, self.cached_agg(ch)));
                    if actual != node.agg {
                        return Err(Violation::StaleNodeAggregate { node: n, cached: node.agg, actual });
                    }
                }
                Ok((total, max))
            }
        }
    }

    fn check_links(&self, order: &[LeafId]) -> Check<()> {
        if order.first() != Some(&self.first_leaf) || order.len() != self.n_leaves {
            return Err(Violation::LeafLinks { leaf: self.first_leaf });
        }
        for (i, &l) in order.iter().enumerate() {
            let leaf = self.leaf(l);
            let prev = i.checked_sub(1).map(|j| order[j]);
            if leaf.prev != prev || leaf.next != order.get(i + 1).copied() {
                return Err(Violation::LeafLinks { leaf: l });
            }
            if let Some(p) = prev {
                if let (Some(a), Some(b)) = (self.leaf(p).arrays.keys().last(), leaf.arrays.keys().first()) {
                    if self.order.cmp_keys(a, b) == Ordering::Greater {
                        return Err(Violation::UnsortedAcrossLeaves { leaf: l });
                    }
                }
            }
        }
        Ok(())
    }

    /// Among any `q` consecutive leaves at most two are non-full.
    pub fn check_window_invariant(&self) -> Check<()> {
        let q = self.params.q;
        let mut flags = std::collections::VecDeque::with_capacity(q);
        let mut non_full = 0;
        let mut cur = Some(self.first_leaf);
        let mut idx = 0usize;
        while let Some(l) = cur {
            let nf = !self.leaf(l).arrays.is_full();
            flags.push_back(nf);
            non_full += usize::from(nf);
            if flags.len() > q {
                non_full -= usize::from(flags.pop_front().expect("window nonempty"));
            }
            if non_full > 2 {
                return Err(Violation::WindowOverfull { first: (idx + 1).saturating_sub(q), non_full });
            }
            idx += 1;
            cur = self.leaf(l).next;
        }
        Ok(())
    }

    fn check_blocks(&self, order: &[LeafId]) -> Check<()> {
        let cfg = self.agg.expect("aggregates enabled");
        let mut leaf_start = 0i64;
        let mut expected = 0i64;
        for &l in order {
            let leaf = self.leaf(l);
            let d = leaf.block;
            self.validate_leaf_block(l).map_err(|fault| Violation::InvalidBlock { leaf: l, fault })?;
            let start = leaf_start + d.offset;
            if start != expected {
                return Err(Violation::Tiling { leaf: l, start, expected });
            }
            if start + d.size as i64 > self.len as i64 {
                return Err(Violation::Tiling { leaf: l, start: start + d.size as i64, expected: self.len as i64 });
            }
            let actual = self.fold_span(l, d.offset, d.size, cfg.spec.identity(), cfg.spec);
            if actual != d.agg {
                return Err(Violation::StaleBlockAggregate { leaf: l, cached: d.agg, actual });
            }
            expected += d.size as i64;
            leaf_start += leaf.arrays.len() as i64;
        }
        if expected != self.len as i64 {
            let last = *order.last().expect("at least one leaf");
            return Err(Violation::Tiling { leaf: last, start: expected, expected: self.len as i64 });
        }
        Ok(())
    }
}
