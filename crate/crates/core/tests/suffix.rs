use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbtree::suffix::{resolve_lcps, naive_lcp, Comparator, Dir, Rule, SavlTree, SparseSuffixIndex, Text};
use sbtree::{AggMode, TreeParams};

const T: &str = "caatcacggtcggac";
const SSA: [usize; 15] = [2, 14, 6, 3, 15, 1, 5, 11, 7, 13, 12, 8, 9, 4, 10];
const SLCP: [usize; 15] = [0, 1, 2, 1, 0, 1, 2, 1, 3, 0, 1, 2, 1, 0, 2];
const RULES: &str = "EALLADRALALLRDA";

/// Positions sorted by brute-force suffix comparison, and adjacent lcps.
fn brute(text: &[u8], ps: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut ssa = ps.to_vec();
    ssa.sort_by(|&a, &b| text[a - 1..].cmp(&text[b - 1..]));
    let mut slcp = vec![0; ssa.len()];
    for i in 1..ssa.len() {
        slcp[i] = naive_lcp(text, ssa[i - 1], ssa[i]);
    }
    (ssa, slcp)
}

fn random_text(rng: &mut ChaCha8Rng, n: usize, sigma: u8) -> Vec<u8> {
    (0..n).map(|_| b'a' + rng.gen_range(0..sigma)).collect()
}

fn small_index(text: &Text, mode: AggMode, comparator: Comparator) -> SparseSuffixIndex {
    let k = (usize::BITS - text.len().leading_zeros()).max(1);
    let params = TreeParams::for_capacity(1 << 10, k).with_t(4).with_q(3).with_b(4);
    SparseSuffixIndex::with_params(text.clone(), params, mode, comparator).unwrap()
}

#[test]
fn example_index() {
    let mut idx = SparseSuffixIndex::new(Text::new(T)).unwrap();
    for p in 1..=15 {
        idx.insert(p).unwrap();
    }
    assert_eq!(idx.ssa(), SSA);
    assert_eq!(idx.slcp(), SLCP);
    for i in 1..15 {
        assert_eq!(idx.lcp_query(SSA[i - 1], SSA[i]).unwrap(), SLCP[i]);
    }
    for p in 1..=15 {
        assert_eq!(idx.lcp_query(p, p).unwrap(), 16 - p);
        for q in 1..=15 {
            assert_eq!(idx.lcp_query(p, q).unwrap(), naive_lcp(T.as_bytes(), p, q));
        }
    }
    assert_eq!(idx.insert(3), Err(sbtree::Error::Duplicate));
    assert!(idx.insert(16).is_err());
}

#[test]
fn example_delete() {
    let mut idx = SparseSuffixIndex::new(Text::new(T)).unwrap();
    for p in 1..=15 {
        idx.insert(p).unwrap();
    }
    idx.delete(7).unwrap();
    let rest: Vec<usize> = (1..=15).filter(|&p| p != 7).collect();
    let (ssa, slcp) = brute(T.as_bytes(), &rest);
    assert_eq!(idx.ssa(), ssa);
    assert_eq!(idx.slcp(), slcp);
    // entry that followed 7 is now the min of the two around it
    assert_eq!(idx.slcp()[8], SLCP[8].min(SLCP[9]));
    assert_eq!(idx.delete(7), Err(sbtree::Error::NotFound));
}

#[test]
fn example_csv() {
    let mut idx = SparseSuffixIndex::new(Text::new(T)).unwrap();
    for p in [1, 2, 3] {
        idx.insert(p).unwrap();
    }
    let mut out = Vec::new();
    idx.write_csv(&mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "rank,pos,slcp\n1,2,0\n2,3,1\n3,1,0\n");
}

#[test]
fn example_savl() {
    let mut savl = SavlTree::new(Text::new(T));
    for p in 1..=15 {
        savl.insert(p).unwrap();
    }
    let ann = |p| {
        let n = savl.find(p).unwrap();
        (n.m, n.d)
    };
    assert_eq!(ann(11), (3, Some(Dir::Left)));
    assert_eq!(ann(14), (2, Some(Dir::Left)));
    assert_eq!(ann(4), (0, None));
    assert_eq!(ann(1), (0, None));
    assert_eq!(ann(3), (1, Some(Dir::Right)));
    assert_eq!(ann(10), (2, Some(Dir::Right)));
    assert_eq!(ann(8), (0, None));
    assert_eq!(savl.ssa(), SSA);
    let tr = savl.slcp();
    assert_eq!(tr.slcp, SLCP);
    let rules: String = tr.rules.iter().map(Rule::to_string).collect();
    assert_eq!(rules, RULES);
    assert!(tr.visits <= 3 * 15);
    assert_eq!(savl.insert(5), Err(sbtree::Error::Duplicate));
}

#[test]
fn savl_trivial() {
    let mut savl = SavlTree::new(Text::new("banana"));
    assert!(savl.ssa().is_empty());
    assert!(savl.slcp().slcp.is_empty());
    savl.insert(4).unwrap();
    let n = savl.node(savl.root().unwrap());
    assert_eq!((n.d, n.m), (None, 0));
    assert_eq!(savl.slcp().slcp, vec![0]);
    assert_eq!(savl.slcp().rules, vec![Rule::E]);
}

#[test]
fn resolve_cases() {
    assert_eq!(resolve_lcps(1, 3, Some(Dir::Left)), (3, 1));
    assert_eq!(resolve_lcps(1, 3, Some(Dir::Right)), (1, 3));
    assert_eq!(resolve_lcps(7, 0, None), (0, 0));
    // node 11 of the example: cla = 7, cra = 5
    let t = T.as_bytes();
    assert_eq!(resolve_lcps(naive_lcp(t, 7, 5), 3, Some(Dir::Left)), (naive_lcp(t, 11, 7), naive_lcp(t, 11, 5)));
}

fn check_savl(text: &Text, order: &[usize]) {
    let mut savl = SavlTree::new(text.clone());
    for &p in order {
        savl.insert(p).unwrap();
    }
    let (ssa, slcp) = brute(text.as_bytes(), order);
    assert_eq!(savl.ssa(), ssa);
    let tr = savl.slcp();
    assert_eq!(tr.slcp, slcp);
    assert!(tr.visits <= 3 * order.len());
    for r in savl.resolved() {
        if let Some(a) = r.cla {
            assert_eq!(r.lcp_cla, text.lcp(r.pos, a), "cla of {}", r.pos);
        }
        if let Some(a) = r.cra {
            assert_eq!(r.lcp_cra, text.lcp(r.pos, a), "cra of {}", r.pos);
        }
    }
}

#[test]
fn savl_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..200 {
        let n = rng.gen_range(1..120);
        let sigma = [1, 2, 4, 26][round % 4];
        let text = Text::new(random_text(&mut rng, n, sigma));
        let mut ps: Vec<usize> = (1..=n).filter(|_| rng.gen_bool(0.6)).collect();
        if ps.is_empty() {
            ps.push(1);
        }
        check_savl(&text, &ps);
        ps.shuffle(&mut rng);
        check_savl(&text, &ps);
    }
}

#[test]
fn index_random_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (mode, comparator) in [
        (AggMode::Batch, Comparator::Fast),
        (AggMode::Merge, Comparator::Fast),
        (AggMode::Merge, Comparator::Naive),
    ] {
        let n = 400;
        let text = Text::new(random_text(&mut rng, n, 2));
        let mut idx = small_index(&text, mode, comparator);
        let mut present: Vec<usize> = Vec::new();
        for step in 0..1500 {
            if present.is_empty() || rng.gen_bool(0.6) {
                let p = rng.gen_range(1..=n);
                if present.contains(&p) {
                    assert!(idx.insert(p).is_err());
                } else {
                    idx.insert(p).unwrap();
                    present.push(p);
                }
            } else {
                let p = present.swap_remove(rng.gen_range(0..present.len()));
                idx.delete(p).unwrap();
            }
            if step % 50 == 0 {
                let (ssa, slcp) = brute(text.as_bytes(), &present);
                assert_eq!(idx.ssa(), ssa);
                assert_eq!(idx.slcp(), slcp);
                idx.tree().check_invariants().unwrap();
                for _ in 0..20 {
                    let a = present[rng.gen_range(0..present.len())];
                    let b = present[rng.gen_range(0..present.len())];
                    assert_eq!(idx.lcp_query(a, b).unwrap(), text.lcp(a, b));
                }
            }
        }
    }
}

#[test]
fn index_matches_savl_and_brute() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 2000;
    let text = Text::new(random_text(&mut rng, n, 4));
    let mut ps: Vec<usize> = (1..=n).collect();
    ps.shuffle(&mut rng);
    ps.truncate(500);
    let mut idx = SparseSuffixIndex::new(text.clone()).unwrap();
    let mut savl = SavlTree::new(text.clone());
    for &p in &ps {
        idx.insert(p).unwrap();
        savl.insert(p).unwrap();
    }
    let (ssa, slcp) = brute(text.as_bytes(), &ps);
    assert_eq!(idx.ssa(), ssa);
    assert_eq!(savl.ssa(), ssa);
    assert_eq!(idx.slcp(), slcp);
    assert_eq!(savl.slcp().slcp, slcp);
}

#[test]
fn all_pairs_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let text = Text::new(random_text(&mut rng, 300, 3));
    let mut idx = small_index(&text, AggMode::Merge, Comparator::Fast);
    let ps: Vec<usize> = (1..=300).filter(|_| rng.gen_bool(0.6)).take(200).collect();
    for &p in &ps {
        idx.insert(p).unwrap();
    }
    for &a in &ps {
        for &b in &ps {
            assert_eq!(idx.lcp_query(a, b).unwrap(), text.lcp(a, b));
        }
    }
}
