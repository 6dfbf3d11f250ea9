use std::io::Write;

use serde::Serialize;

use super::{Comparator, SuffixOrder, Text};
use crate::aggregate::{AggMode, AggregateSpec};
use crate::error::{Error, Result};
use crate::packed::PackedKeyBuffer;
use crate::tree::{Tree, TreeParams};

/// One row of the sparse suffix and lcp arrays (rank is 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlcpRow {
    pub rank: usize,
    pub pos: usize,
    pub slcp: usize,
}

/// Dynamic sparse suffix tree: suffix start positions kept in suffix order,
/// each carrying the lcp with its predecessor, aggregated by minimum.
#[derive(Debug, Clone)]
pub struct SparseSuffixIndex {
    tree: Tree<PackedKeyBuffer, SuffixOrder>,
}

/// Bits needed for positions and lcp values up to `n`.
fn width_for(n: usize) -> u32 {
    (usize::BITS - n.leading_zeros()).max(1)
}

impl SparseSuffixIndex {
    pub fn new(text: Text) -> Result<Self> {
        let params = TreeParams::for_capacity(text.len().max(2) as u64, width_for(text.len()));
        Self::with_params(text, params, AggMode::Merge, Comparator::Fast)
    }

    pub fn with_params(text: Text, params: TreeParams, mode: AggMode, comparator: Comparator) -> Result<Self> {
        let need = width_for(text.len());
        if params.k < need || params.value_width < need {
            return Err(Error::InvalidParams(format!(
                "text of length {} needs {need}-bit keys and values",
                text.len()
            )));
        }
        let order = SuffixOrder::new(text, comparator);
        let tree = Tree::build(params, order, true, Some((AggregateSpec::Min, mode)))?;
        Ok(Self { tree })
    }

    pub fn text(&self) -> &Text {
        self.tree.order().text()
    }

    pub fn tree(&self) -> &Tree<PackedKeyBuffer, SuffixOrder> {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.text().check_pos(p).is_ok() && self.tree.contains(p as u64)
    }

    fn lcp(&self, a: u64, b: u64) -> u64 {
        self.text().lcp(a as usize, b as usize) as u64
    }

    pub fn insert(&mut self, p: usize) -> Result<()> {
        self.text().check_pos(p)?;
        let key = p as u64;
        if self.tree.contains(key) {
            return Err(Error::Duplicate);
        }
        let pred = self.tree.predecessor(key);
        let succ = self.tree.successor(key);
        let value = pred.map_or(0, |a| self.lcp(a, key));
        self.tree.insert_with_value(key, value)?;
        if let Some(c) = succ {
            let v = self.lcp(key, c);
            self.tree.set_value(c, v)?;
        }
        Ok(())
    }

    pub fn delete(&mut self, p: usize) -> Result<()> {
        self.text().check_pos(p)?;
        let key = p as u64;
        let own = self.tree.access_key(key)?;
        let succ = {
            let r = self.tree.rank(key);
            (r < self.tree.len()).then(|| self.tree.select(r))
        };
        self.tree.delete(key)?;
        if let Some(c) = succ {
            // lcp(pred, succ) is the smaller of the two lcps around p
            let v = own.min(self.tree.access_key(c)?);
            self.tree.set_value(c, v)?;
        }
        Ok(())
    }

    /// lcp of two stored suffixes, as the minimum satellite value strictly
    /// after the smaller one up to the larger one.
    pub fn lcp_query(&self, p1: usize, p2: usize) -> Result<usize> {
        for p in [p1, p2] {
            if !self.contains(p) {
                return Err(Error::NotFound);
            }
        }
        if p1 == p2 {
            return Ok(self.text().len() - p1 + 1);
        }
        let r1 = self.tree.rank(p1 as u64);
        let r2 = self.tree.rank(p2 as u64);
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        Ok(self.tree.range_aggregate_ranks(lo, hi)? as usize)
    }

    /// Stored positions in suffix order.
    pub fn ssa(&self) -> Vec<usize> {
        self.tree.keys().into_iter().map(|k| k as usize).collect()
    }

    /// Satellite values in suffix order.
    pub fn slcp(&self) -> Vec<usize> {
        self.tree.values().into_iter().map(|v| v as usize).collect()
    }

    pub fn rows(&self) -> Vec<SlcpRow> {
        self.ssa()
            .into_iter()
            .zip(self.slcp())
            .enumerate()
            .map(|(i, (pos, slcp))| SlcpRow { rank: i + 1, pos, slcp })
            .collect()
    }

    /// Writes `rank,pos,slcp` lines with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "rank,pos,slcp")?;
        for r in self.rows() {
            writeln!(out, "{},{},{}", r.rank, r.pos, r.slcp)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width() {
        assert_eq!(width_for(1), 1);
        assert_eq!(width_for(15), 4);
        assert_eq!(width_for(16), 5);
    }
}
