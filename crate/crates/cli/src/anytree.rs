use sbtree::varcode::{DeltaLeaf, GammaLeaf};
use sbtree::{AggMode, AggregateSpec, Counters, Natural, Tree, TreeParams, TreeStats, Violation};

use crate::config::Code;

/// A tree over integer keys with any of the leaf stores.
pub enum AnyTree {
    Plain(Tree),
    Gamma(Tree<GammaLeaf, Natural>),
    Delta(Tree<DeltaLeaf, Natural>),
}

macro_rules! each {
    ($self:expr, $t:ident => $e:expr) => {
        match $self {
            AnyTree::Plain($t) => $e,
            AnyTree::Gamma($t) => $e,
            AnyTree::Delta($t) => $e,
        }
    };
}

impl AnyTree {
    pub fn new(
        params: TreeParams,
        compressed: Option<Code>,
        aggregate: Option<(AggregateSpec, AggMode)>,
    ) -> sbtree::Result<Self> {
        Ok(match compressed {
            None => AnyTree::Plain(Tree::build(params, Natural, false, aggregate)?),
            Some(Code::Gamma) => AnyTree::Gamma(Tree::build(params, Natural, false, aggregate)?),
            Some(Code::Delta) => AnyTree::Delta(Tree::build(params, Natural, false, aggregate)?),
        })
    }

    pub fn insert(&mut self, key: u64, value: u64) -> sbtree::Result<()> {
        each!(self, t => t.insert_with_value(key, value))
    }

    pub fn delete(&mut self, key: u64) -> sbtree::Result<()> {
        each!(self, t => t.delete(key))
    }

    pub fn set_value(&mut self, key: u64, value: u64) -> sbtree::Result<()> {
        each!(self, t => t.set_value(key, value))
    }

    pub fn contains(&self, key: u64) -> bool {
        each!(self, t => t.contains(key))
    }

    pub fn predecessor(&self, key: u64) -> Option<u64> {
        each!(self, t => t.predecessor(key))
    }

    pub fn range_aggregate(&self, lo: u64, hi: u64) -> sbtree::Result<u64> {
        each!(self, t => t.range_aggregate(lo, hi))
    }

    pub fn root_aggregate(&self) -> sbtree::Result<u64> {
        each!(self, t => t.root_aggregate())
    }

    pub fn len(&self) -> usize {
        each!(self, t => t.len())
    }

    pub fn stats(&self) -> TreeStats {
        each!(self, t => t.stats())
    }

    pub fn counters(&self) -> Counters {
        each!(self, t => t.counters().clone())
    }

    pub fn check_invariants(&self) -> Result<(), Violation> {
        each!(self, t => t.check_invariants())
    }

    pub fn inject_separator_fault(&mut self) -> bool {
        each!(self, t => t.inject_separator_fault())
    }

    pub fn keys(&self) -> Vec<u64> {
        each!(self, t => t.keys())
    }

    pub fn values(&self) -> Vec<u64> {
        each!(self, t => t.values())
    }
}
