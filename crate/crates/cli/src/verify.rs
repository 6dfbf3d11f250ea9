//! Randomized oracle and invariant suite.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sbtree::suffix::{naive_lcp, Comparator, SavlTree, SparseSuffixIndex, Text};
use sbtree::{AggMode, AggregateSpec, TreeParams};

use crate::anytree::AnyTree;
use crate::config::{Code, RunConfig};
use crate::input;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Corrupt one internal separator after the workload.
    Separator,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub cfg: RunConfig,
    /// Operations per suite.
    #[arg(long, default_value_t = 10_000)]
    pub ops: usize,
    /// Inject a fault to check that the suite catches it.
    #[arg(long, value_enum)]
    pub inject_fault: Option<Fault>,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum Op {
    Insert { key: u64, value: u64 },
    Delete { key: u64 },
    Query { lo: u64, hi: u64 },
}

#[derive(Serialize)]
struct Repro {
    suite: String,
    seed: u64,
    params: TreeParams,
    violation: String,
    original_ops: usize,
    ops: Vec<Op>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

type Check = std::result::Result<(), String>;

/// Invariant checks run after every op on small trees, then every 32 ops.
fn due(i: usize, len: usize, last: bool) -> bool {
    last || len <= 256 || i % 32 == 0
}

fn gen_ops(rng: &mut ChaCha8Rng, n: usize, universe: u64, values: bool) -> Vec<Op> {
    (0..n)
        .map(|_| {
            let key = rng.gen_range(0..universe);
            match rng.gen_range(0..4) {
                0 | 1 => Op::Insert { key, value: if values { rng.gen_range(0..1 << 20) } else { 0 } },
                2 => Op::Delete { key },
                _ => {
                    let hi = rng.gen_range(key..universe);
                    Op::Query { lo: key, hi }
                }
            }
        })
        .collect()
}

fn check_multiset(params: TreeParams, ops: &[Op], fault: Option<Fault>) -> Check {
    let mut tree = AnyTree::new(params, None, None).map_err(|e| e.to_string())?;
    let mut oracle: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, op) in ops.iter().enumerate() {
        match *op {
            Op::Insert { key, .. } => {
                tree.insert(key, 0).map_err(|e| format!("op {i}: insert {key}: {e}"))?;
                *oracle.entry(key).or_default() += 1;
            }
            Op::Delete { key } => {
                let expect = match oracle.get_mut(&key) {
                    Some(c) if *c > 1 => {
                        *c -= 1;
                        true
                    }
                    Some(_) => oracle.remove(&key).is_some(),
                    None => false,
                };
                if tree.delete(key).is_ok() != expect {
                    return Err(format!("op {i}: delete {key} disagrees with oracle"));
                }
            }
            Op::Query { lo, .. } => {
                let expect = oracle.range(..=lo).next_back().map(|(&k, _)| k);
                let got = tree.predecessor(lo);
                if got != expect {
                    return Err(format!("op {i}: predecessor({lo}) = {got:?}, oracle {expect:?}"));
                }
            }
        }
        if due(i, tree.len(), i + 1 == ops.len()) {
            tree.check_invariants().map_err(|v| format!("op {i}: {}: {v}", v.name()))?;
        }
    }
    if fault == Some(Fault::Separator) && tree.inject_separator_fault() {
        tree.check_invariants().map_err(|v| format!("after injected fault: {}: {v}", v.name()))?;
    }
    Ok(())
}

fn check_aggregate(params: TreeParams, spec: AggregateSpec, mode: AggMode, ops: &[Op]) -> Check {
    let mut tree = AnyTree::new(params, None, Some((spec, mode))).map_err(|e| e.to_string())?;
    let mut oracle: BTreeMap<u64, u64> = BTreeMap::new();
    for (i, op) in ops.iter().enumerate() {
        match *op {
            Op::Insert { key, value } => {
                let r = if oracle.insert(key, value).is_some() {
                    tree.set_value(key, value)
                } else {
                    tree.insert(key, value)
                };
                r.map_err(|e| format!("op {i}: insert {key}: {e}"))?;
            }
            Op::Delete { key } => {
                if tree.delete(key).is_ok() != oracle.remove(&key).is_some() {
                    return Err(format!("op {i}: delete {key} disagrees with oracle"));
                }
            }
            Op::Query { lo, hi } => {
                let expect = oracle.range(lo..=hi).fold(spec.identity(), |a, (_, &v)| spec.merge(a, v));
                let got = tree.range_aggregate(lo, hi).map_err(|e| e.to_string())?;
                if got != expect {
                    return Err(format!("op {i}: {spec} over [{lo}, {hi}] = {got}, brute force {expect}"));
                }
            }
        }
        if due(i, tree.len(), i + 1 == ops.len()) {
            tree.check_invariants().map_err(|v| format!("op {i}: {}: {v}", v.name()))?;
            let all = oracle.values().fold(spec.identity(), |a, &v| spec.merge(a, v));
            let root = tree.root_aggregate().map_err(|e| e.to_string())?;
            if root != all {
                return Err(format!("op {i}: root aggregate {root}, brute force {all}"));
            }
        }
    }
    Ok(())
}

fn check_compressed(params: TreeParams, code: Code, ops: &[Op]) -> Check {
    let mut plain = AnyTree::new(params, None, None).map_err(|e| e.to_string())?;
    let mut packed = AnyTree::new(params, Some(code), None).map_err(|e| e.to_string())?;
    for (i, op) in ops.iter().enumerate() {
        match *op {
            Op::Insert { key, .. } => {
                let expect = if plain.contains(key) { Err(sbtree::Error::Duplicate) } else { plain.insert(key, 0) };
                if packed.insert(key, 0) != expect {
                    return Err(format!("op {i}: insert {key} differs"));
                }
            }
            Op::Delete { key } => {
                if packed.delete(key) != plain.delete(key) {
                    return Err(format!("op {i}: delete {key} differs"));
                }
            }
            Op::Query { lo, .. } => {
                if packed.predecessor(lo) != plain.predecessor(lo) {
                    return Err(format!("op {i}: predecessor({lo}) differs"));
                }
            }
        }
        if due(i, packed.len(), i + 1 == ops.len()) {
            packed.check_invariants().map_err(|v| format!("op {i}: {}: {v}", v.name()))?;
            if packed.keys() != plain.keys() {
                return Err(format!("op {i}: key sequences differ"));
            }
        }
    }
    Ok(())
}

fn brute(text: &[u8], ps: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut ssa = ps.to_vec();
    ssa.sort_by(|&a, &b| text[a - 1..].cmp(&text[b - 1..]));
    let mut slcp = vec![0; ssa.len()];
    for i in 1..ssa.len() {
        slcp[i] = naive_lcp(text, ssa[i - 1], ssa[i]);
    }
    (ssa, slcp)
}

fn check_suffix(params: TreeParams, text: &Text, ops: &[Op]) -> Check {
    let mut idx = SparseSuffixIndex::with_params(text.clone(), params, AggMode::Merge, Comparator::Naive)
        .map_err(|e| e.to_string())?;
    let mut present: Vec<usize> = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        match *op {
            Op::Insert { key, .. } => {
                let p = key as usize;
                if idx.insert(p).is_ok() == present.contains(&p) {
                    return Err(format!("op {i}: insert position {p} disagrees with oracle"));
                }
                if !present.contains(&p) {
                    present.push(p);
                }
            }
            Op::Delete { key } => {
                let p = key as usize;
                let had = present.iter().position(|&x| x == p);
                if idx.delete(p).is_ok() != had.is_some() {
                    return Err(format!("op {i}: delete position {p} disagrees with oracle"));
                }
                if let Some(j) = had {
                    present.swap_remove(j);
                }
            }
            Op::Query { lo, hi } => {
                let (a, b) = (lo as usize, hi as usize);
                if present.contains(&a) && present.contains(&b) {
                    let got = idx.lcp_query(a, b).map_err(|e| e.to_string())?;
                    if got != text.lcp(a, b) {
                        return Err(format!("op {i}: lcp({a}, {b}) = {got}, naive {}", text.lcp(a, b)));
                    }
                }
            }
        }
        if i % 50 == 0 || i + 1 == ops.len() {
            let (ssa, slcp) = brute(text.as_bytes(), &present);
            if idx.ssa() != ssa || idx.slcp() != slcp {
                return Err(format!("op {i}: index arrays differ from brute force"));
            }
            let mut savl = SavlTree::new(text.clone());
            for &p in &present {
                savl.insert(p).map_err(|e| e.to_string())?;
            }
            let trace = savl.slcp();
            if savl.ssa() != ssa || trace.slcp != slcp {
                return Err(format!("op {i}: suffix AVL tree arrays differ from brute force"));
            }
            if trace.visits > 3 * present.len() {
                return Err(format!("op {i}: {} visits for {} nodes", trace.visits, present.len()));
            }
            for r in savl.resolved() {
                let bad_cla = r.cla.is_some_and(|c| r.lcp_cla != text.lcp(r.pos, c));
                let bad_cra = r.cra.is_some_and(|c| r.lcp_cra != text.lcp(r.pos, c));
                if bad_cla || bad_cra {
                    return Err(format!("op {i}: ancestor lcps wrong at node {}", r.pos));
                }
            }
        }
    }
    Ok(())
}

/// Drops chunks of `ops` while `fails` keeps holding, within a budget of
/// candidate runs.
fn minimize<F: FnMut(&[Op]) -> bool>(ops: &[Op], mut fails: F) -> Vec<Op> {
    let mut cur = ops.to_vec();
    let mut chunk = (cur.len() / 2).max(1);
    let mut budget = 400;
    loop {
        let mut i = 0;
        let mut removed = false;
        while i < cur.len() && budget > 0 {
            let end = (i + chunk).min(cur.len());
            let cand: Vec<Op> = cur[..i].iter().chain(&cur[end..]).copied().collect();
            budget -= 1;
            if fails(&cand) {
                cur = cand;
                removed = true;
            } else {
                i += chunk;
            }
        }
        if budget == 0 || (chunk == 1 && !removed) {
            return cur;
        }
        if !removed {
            chunk = (chunk / 2).max(1);
        }
    }
}

fn check_fixture() -> Result<Check> {
    let (text, positions, csv) = input::fixture_paths("example");
    let text = Text::new(input::read_text(&text)?);
    let positions = input::read_positions(&positions)?;
    let expected = std::fs::read_to_string(&csv).with_context(|| format!("reading {}", csv.display()))?;
    let mut idx = SparseSuffixIndex::new(text.clone())?;
    let mut savl = SavlTree::new(text);
    for &p in &positions {
        idx.insert(p)?;
        savl.insert(p)?;
    }
    let mut out = Vec::new();
    idx.write_csv(&mut out)?;
    if String::from_utf8(out)? != expected {
        return Ok(Err("example fixture CSV differs".into()));
    }
    if savl.slcp().slcp != idx.slcp() || savl.ssa() != idx.ssa() {
        return Ok(Err("suffix AVL tree disagrees with the index on the example".into()));
    }
    Ok(Ok(()))
}

struct Suite {
    name: String,
    ops: Vec<Op>,
    text: Option<Text>,
    check: Box<dyn Fn(&[Op]) -> Check>,
}

pub fn run(args: &VerifyArgs) -> Result<()> {
    let cfg = &args.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut small = cfg.clone();
    small.t = small.t.or(Some(4));
    small.q = small.q.or(Some(4));
    small.b = small.b.or(Some(8));
    let params = small.params(1 << 12, 32);
    params.validate()?;
    let n = args.ops;
    let fault = args.inject_fault;

    let mut suites = vec![Suite {
        name: "multiset".into(),
        ops: gen_ops(&mut rng, n, 4096, false),
        text: None,
        check: Box::new(move |ops| check_multiset(params, ops, fault)),
    }];
    for mode in [AggMode::Batch, AggMode::Merge] {
        for spec in [AggregateSpec::Min, AggregateSpec::Sum] {
            suites.push(Suite {
                name: format!("aggregate-{mode:?}-{spec}").to_lowercase(),
                ops: gen_ops(&mut rng, n, 4096, true),
                text: None,
                check: Box::new(move |ops| check_aggregate(params, spec, mode, ops)),
            });
        }
    }
    for code in [Code::Gamma, Code::Delta] {
        suites.push(Suite {
            name: format!("compressed-{code:?}").to_lowercase(),
            ops: gen_ops(&mut rng, n, 1 << 14, false),
            text: None,
            check: Box::new(move |ops| check_compressed(params, code, ops)),
        });
    }
    let len = 400;
    let text = Text::new((0..len).map(|_| b'a' + rng.gen_range(0..3u8)).collect::<Vec<u8>>());
    let k = 16;
    let sparams = TreeParams::for_capacity(len as u64, k).with_t(4).with_q(4).with_b(6);
    let ops: Vec<Op> = gen_ops(&mut rng, n.min(3000), len as u64, false)
        .into_iter()
        .map(|op| match op {
            Op::Insert { key, .. } => Op::Insert { key: key + 1, value: 0 },
            Op::Delete { key } => Op::Delete { key: key + 1 },
            Op::Query { lo, hi } => Op::Query { lo: lo + 1, hi: hi + 1 },
        })
        .collect();
    let t2 = text.clone();
    suites.push(Suite {
        name: "suffix".into(),
        ops,
        text: Some(text),
        check: Box::new(move |ops| check_suffix(sparams, &t2, ops)),
    });

    if let Err(msg) = check_fixture()? {
        eprintln!("violation in suite fixture: {msg}");
        std::process::exit(1);
    }
    println!("suite fixture ok");

    for s in &suites {
        match (s.check)(&s.ops) {
            Ok(()) => println!("suite {} ok ({} ops)", s.name, s.ops.len()),
            Err(msg) => {
                let small_ops = minimize(&s.ops, |ops| (s.check)(ops).is_err());
                let violation = (s.check)(&small_ops).err().unwrap_or(msg);
                let repro = Repro {
                    suite: s.name.clone(),
                    seed: cfg.seed,
                    params: if s.text.is_some() { sparams } else { params },
                    violation: violation.clone(),
                    original_ops: s.ops.len(),
                    ops: small_ops,
                    text: s.text.as_ref().map(|t| String::from_utf8_lossy(t.as_bytes()).into_owned()),
                };
                let path = cfg.out.clone().unwrap_or_else(|| PathBuf::from("sbtree-repro.json"));
                std::fs::write(&path, serde_json::to_string_pretty(&repro)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
                eprintln!(
                    "violation in suite {}: {violation}\nminimized to {} ops, repro written to {}",
                    s.name,
                    repro.ops.len(),
                    path.display()
                );
                std::process::exit(1);
            }
        }
    }
    println!("all suites passed");
    Ok(())
}
