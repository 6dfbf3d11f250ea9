//! Suffix AVL tree, built without rebalancing.
//!
//! For a node `v`, `cla(v)` is the lowest ancestor holding `v` in its left
//! subtree and `cra(v)` the lowest holding it in its right subtree, so
//! `T[cra(v)..] < T[v..] < T[cla(v)..]`. Each node keeps the larger of its
//! lcps with the two (`m`) and which one it was (`d`).

use std::fmt;

use super::Text;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SavlNode {
    pub pos: usize,
    pub left: Option<usize>,
    pub right: Option<usize>,
    /// `None` when both lcps are zero or absent.
    pub d: Option<Dir>,
    pub m: usize,
}

/// Which case produced an SLCP entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Smallest stored suffix.
    E,
    /// Predecessor is the left child, linked to this node by its `m`.
    L,
    /// No left child; `m` is the lcp with `cra`.
    R,
    /// No left child; lcp with `cra` recovered from the ancestor stack.
    A,
    /// Predecessor is deeper in the left subtree.
    D,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Rule::E => 'E',
            Rule::L => 'L',
            Rule::R => 'R',
            Rule::A => 'A',
            Rule::D => 'D',
        };
        write!(f, "{c}")
    }
}

/// Output of [`SavlTree::slcp`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlcpTrace {
    pub slcp: Vec<usize>,
    pub rules: Vec<Rule>,
    /// Node visits during the tour.
    pub visits: usize,
}

/// A node with its closest ancestors and the lcps derived for them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolved {
    pub pos: usize,
    pub cla: Option<usize>,
    pub cra: Option<usize>,
    pub lcp_cla: usize,
    pub lcp_cra: usize,
}

/// From `big_l = lcp(cla, cra)` and a node's `(m, d)`, its lcps with
/// `cla` and `cra`. Missing ancestors read as 0.
pub fn resolve_lcps(big_l: usize, m: usize, d: Option<Dir>) -> (usize, usize) {
    match d {
        Some(Dir::Left) => (m, big_l),
        Some(Dir::Right) => (big_l, m),
        None => (0, 0),
    }
}

#[derive(Debug, Clone)]
pub struct SavlTree {
    text: Text,
    nodes: Vec<SavlNode>,
    root: Option<usize>,
}

#[derive(Clone, Copy)]
struct Frame {
    node: usize,
    big_l: usize,
    has_cla: bool,
    has_cra: bool,
    is_left_child: bool,
    stage: u8,
}

impl SavlTree {
    pub fn new(text: Text) -> Self {
        Self { text, nodes: Vec::new(), root: None }
    }

    pub fn text(&self) -> &Text {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn node(&self, id: usize) -> &SavlNode {
        &self.nodes[id]
    }

    pub fn find(&self, p: usize) -> Option<&SavlNode> {
        self.nodes.iter().find(|n| n.pos == p)
    }

    /// Inserts suffix `p` as a new leaf. Comparisons skip the prefix shared
    /// by the current `cla`/`cra` candidates.
    pub fn insert(&mut self, p: usize) -> Result<()> {
        self.text.check_pos(p)?;
        let id = self.nodes.len();
        let (mut lcp_cla, mut lcp_cra) = (0usize, 0usize);
        let mut attach = None;
        let mut cur = self.root;
        while let Some(v) = cur {
            let (ord, l) = self.text.compare_from(p, self.nodes[v].pos, lcp_cla.min(lcp_cra));
            match ord {
                std::cmp::Ordering::Equal => return Err(Error::Duplicate),
                std::cmp::Ordering::Less => {
                    lcp_cla = l;
                    attach = Some((v, Dir::Left));
                    cur = self.nodes[v].left;
                }
                std::cmp::Ordering::Greater => {
                    lcp_cra = l;
                    attach = Some((v, Dir::Right));
                    cur = self.nodes[v].right;
                }
            }
        }
        let (d, m) = if lcp_cla == 0 && lcp_cra == 0 {
            (None, 0)
        } else if lcp_cla >= lcp_cra {
            (Some(Dir::Left), lcp_cla)
        } else {
            (Some(Dir::Right), lcp_cra)
        };
        self.nodes.push(SavlNode { pos: p, left: None, right: None, d, m });
        match attach {
            None => self.root = Some(id),
            Some((v, Dir::Left)) => self.nodes[v].left = Some(id),
            Some((v, Dir::Right)) => self.nodes[v].right = Some(id),
        }
        Ok(())
    }

    /// Positions in suffix order.
    pub fn ssa(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = Vec::new();
        let mut cur = self.root;
        while cur.is_some() || !stack.is_empty() {
            while let Some(v) = cur {
                stack.push(v);
                cur = self.nodes[v].left;
            }
            let v = stack.pop().expect("stack nonempty");
            out.push(self.nodes[v].pos);
            cur = self.nodes[v].right;
        }
        out
    }

    /// Every node's closest ancestors and the lcps with them as derived
    /// from `lcp(cla, cra)` along the root path.
    pub fn resolved(&self) -> Vec<Resolved> {
        let mut out = Vec::with_capacity(self.len());
        let Some(r) = self.root else { return out };
        let mut stack = vec![(r, 0usize, None::<usize>, None::<usize>)];
        while let Some((v, big_l, cla, cra)) = stack.pop() {
            let n = &self.nodes[v];
            let (lc, lr) = resolve_lcps(big_l, n.m, n.d);
            let lcp_cla = if cla.is_some() { lc } else { 0 };
            let lcp_cra = if cra.is_some() { lr } else { 0 };
            out.push(Resolved { pos: n.pos, cla, cra, lcp_cla, lcp_cra });
            if let Some(x) = n.left {
                stack.push((x, lcp_cra, Some(n.pos), cra));
            }
            if let Some(y) = n.right {
                stack.push((y, lcp_cla, cla, Some(n.pos)));
            }
        }
        out
    }

    /// Sparse lcp array in one Euler tour, keeping `lcp(cla, cra)` for the
    /// ancestors on a stack.
    ///
    /// A node without a left child gets its own entry from its lcp with
    /// `cra`; a node without a right child writes its successor's entry
    /// from its lcp with `cla`. Every rank is written exactly once.
    pub fn slcp(&self) -> SlcpTrace {
        let m = self.len();
        let mut slcp = vec![0; m];
        let mut rules = vec![Rule::E; m];
        let mut written = vec![false; m];
        let mut visits = 0;
        let mut rank = 0;
        let mut put = |r: usize, v: usize, rule: Rule, slcp: &mut Vec<usize>, rules: &mut Vec<Rule>| {
            assert!(!written[r], "slcp rank {r} written twice");
            written[r] = true;
            slcp[r] = v;
            rules[r] = rule;
        };
        let Some(root) = self.root else {
            return SlcpTrace { slcp, rules, visits };
        };
        let mut stack = vec![Frame {
            node: root,
            big_l: 0,
            has_cla: false,
            has_cra: false,
            is_left_child: false,
            stage: 0,
        }];
        while let Some(f) = stack.last_mut() {
            visits += 1;
            let n = &self.nodes[f.node];
            let (lc, lr) = resolve_lcps(f.big_l, n.m, n.d);
            let fr = *f;
            match fr.stage {
                0 => {
                    f.stage = 1;
                    if let Some(x) = n.left {
                        stack.push(Frame {
                            node: x,
                            big_l: lr,
                            has_cla: true,
                            has_cra: fr.has_cra,
                            is_left_child: true,
                            stage: 0,
                        });
                    }
                }
                1 => {
                    f.stage = 2;
                    if n.left.is_none() {
                        let (v, rule) = if !fr.has_cra {
                            (0, Rule::E)
                        } else if n.d == Some(Dir::Right) && fr.has_cla {
                            (lr, Rule::R)
                        } else {
                            (lr, Rule::A)
                        };
                        put(rank, v, rule, &mut slcp, &mut rules);
                    }
                    if n.right.is_none() && fr.has_cla {
                        let rule = if fr.is_left_child && n.d == Some(Dir::Left) { Rule::L } else { Rule::D };
                        put(rank + 1, lc, rule, &mut slcp, &mut rules);
                    }
                    rank += 1;
                    if let Some(y) = n.right {
                        stack.push(Frame {
                            node: y,
                            big_l: lc,
                            has_cla: fr.has_cla,
                            has_cra: true,
                            is_left_child: false,
                            stage: 0,
                        });
                    }
                }
                _ => {
                    stack.pop();
                }
            }
        }
        assert!(written.iter().all(|&w| w), "slcp rank left unwritten");
        SlcpTrace { slcp, rules, visits }
    }
}
