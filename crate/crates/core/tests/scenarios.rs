use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbtree::varcode::{DeltaLeaf, GammaLeaf};
use sbtree::{AggMode, AggregateSpec, KeyStore, Natural, Tree, TreeParams, TreeStats, WORD_BITS};

fn tiny() -> TreeParams {
    TreeParams::for_capacity(1 << 10, 16).with_t(3).with_q(3).with_b(3)
}

fn layout<S: KeyStore, O: sbtree::KeyOrder>(t: &Tree<S, O>) -> Vec<Vec<u64>> {
    t.leaf_ids().into_iter().map(|l| t.leaf_keys(l)).collect()
}

/// Leaves [8,10,12] [16,17,18] [20] with b = 3.
fn rotation_setup<S: KeyStore>(mut t: Tree<S, Natural>) -> Tree<S, Natural> {
    for k in [8, 10, 12, 16, 17, 18, 20, 5] {
        t.insert_with_value(k, k).unwrap();
    }
    t.delete(5).unwrap();
    assert_eq!(layout(&t), vec![vec![8, 10, 12], vec![16, 17, 18], vec![20]]);
    t
}

#[test]
fn rotation_two_hops() {
    let mut t = rotation_setup(Tree::new(tiny()).unwrap());
    let before = t.counters().rotations;
    t.insert(9).unwrap();
    assert_eq!(layout(&t), vec![vec![8, 9, 10], vec![12, 16, 17], vec![18, 20]]);
    // one boundary key moved per hop
    assert_eq!(t.counters().rotations, before + 2);
    assert_eq!(t.n_leaves(), 3);
    t.check_invariants().unwrap();
}

#[test]
fn insert_into_non_full_leaf() {
    let mut t = rotation_setup(Tree::with_aggregate(tiny(), AggregateSpec::Min, AggMode::Merge).unwrap());
    let c = t.counters().clone();
    t.insert_with_value(21, 21).unwrap();
    assert_eq!(layout(&t), vec![vec![8, 10, 12], vec![16, 17, 18], vec![20, 21]]);
    assert_eq!(t.counters().rotations, c.rotations);
    assert_eq!(t.counters().block_evals, c.block_evals);
}

#[test]
fn rotation_keeps_block_contents() {
    for mode in [AggMode::Batch, AggMode::Merge] {
        let mut t = rotation_setup(Tree::with_aggregate(tiny(), AggregateSpec::Max, mode).unwrap());
        let ids = t.leaf_ids();
        let before: Vec<_> = ids.iter().map(|&l| t.block(l)).collect();
        let evals = t.counters().block_evals;
        t.insert_with_value(9, 9).unwrap();
        assert_eq!(t.leaf_ids(), ids);
        let after: Vec<_> = ids.iter().map(|&l| t.block(l)).collect();
        // 12 left the first leaf but its block still covers it
        assert_eq!(after[0].agg, 12);
        assert_eq!(after[0].size, before[0].size + 1);
        for i in 1..3 {
            assert_eq!(after[i].offset, before[i].offset + 1, "leaf {i}");
            assert_eq!(after[i].size, before[i].size);
            assert_eq!(after[i].agg, before[i].agg);
        }
        assert_eq!(t.counters().block_evals, evals, "no full evals");
        t.check_invariants().unwrap();
    }
}

#[test]
fn predecessor_examples() {
    let mut t = Tree::new(tiny()).unwrap();
    for k in [3, 7, 9] {
        t.insert(k).unwrap();
    }
    assert_eq!(t.predecessor(8), Some(7));
    assert_eq!(t.predecessor(9), Some(9));
    assert_eq!(t.predecessor(2), None);
    assert_eq!(t.successor(8), Some(9));
}

#[test]
fn delete_to_empty() {
    let mut t = Tree::new(tiny()).unwrap();
    for k in 0..40 {
        t.insert(k).unwrap();
    }
    for k in 0..40 {
        t.delete(k).unwrap();
        t.check_invariants().unwrap();
    }
    assert!(t.is_empty());
    assert_eq!(t.n_leaves(), 1);
    assert_eq!(t.height(), 1);
    assert_eq!(t.delete(3), Err(sbtree::Error::NotFound));
}

#[test]
fn separator_fault_reported() {
    let mut t = Tree::new(tiny()).unwrap();
    for k in 0..30 {
        t.insert(k * 2).unwrap();
    }
    assert!(t.inject_separator_fault());
    let v = t.check_invariants().unwrap_err();
    assert!(matches!(v, sbtree::Violation::SeparatorMismatch { .. }), "{v}");
}

#[test]
fn range_sum_series() {
    for mode in [AggMode::Batch, AggMode::Merge] {
        let params = TreeParams::for_capacity(1 << 10, 16).with_t(4).with_q(3).with_b(6);
        let mut t = Tree::with_aggregate(params, AggregateSpec::Sum, mode).unwrap();
        for k in 1..=100 {
            t.insert_with_value(k, k).unwrap();
        }
        assert_eq!(t.range_aggregate(10, 20).unwrap(), 165);
        assert_eq!(t.range_aggregate(1, 100).unwrap(), t.root_aggregate().unwrap());
        assert_eq!(t.root_aggregate().unwrap(), 5050);
        assert_eq!(t.range_aggregate(30, 20).unwrap(), 0);
        assert_eq!(t.access_key(42).unwrap(), 42);
    }
}

#[test]
fn delete_unique_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut t = Tree::with_aggregate(tiny(), AggregateSpec::Min, AggMode::Merge).unwrap();
    let mut vals = std::collections::BTreeMap::new();
    for k in 0..200u64 {
        let v = rng.gen_range(10..1000);
        t.insert_with_value(k, v).unwrap();
        vals.insert(k, v);
    }
    t.set_value(77, 1).unwrap();
    vals.insert(77, 1);
    assert_eq!(t.root_aggregate().unwrap(), 1);
    t.delete(77).unwrap();
    vals.remove(&77);
    assert_eq!(t.root_aggregate().unwrap(), *vals.values().min().unwrap());
    t.check_invariants().unwrap();
}

#[test]
fn aggregates_disabled() {
    let t = Tree::new(tiny()).unwrap();
    assert_eq!(t.root_aggregate(), Err(sbtree::Error::AggregatesDisabled));
}

#[test]
fn empty_tree_stats() {
    let p = TreeParams::default();
    let t = Tree::new(p).unwrap();
    let s: TreeStats = t.stats();
    assert_eq!(s.n_keys, 0);
    assert_eq!(s.bits_leaves, p.b * p.k as usize + 4 * WORD_BITS);
}

fn differential<S: KeyStore>(seed: u64) {
    let params = TreeParams::for_capacity(1 << 12, 20).with_t(5).with_q(4).with_b(16);
    let mut plain = Tree::new(params).unwrap();
    let mut packed: Tree<S, Natural> = Tree::build(params, Natural, false, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let k = rng.gen_range(0..1u64 << 14);
        match rng.gen_range(0..3) {
            0 | 1 => {
                let a = if plain.contains(k) { Err(sbtree::Error::Duplicate) } else { plain.insert(k) };
                assert_eq!(a, packed.insert(k));
            }
            _ => assert_eq!(plain.delete(k), packed.delete(k)),
        }
        assert_eq!(plain.predecessor(k), packed.predecessor(k));
        assert_eq!(plain.rank(k), packed.rank(k));
        assert_eq!(plain.len(), packed.len());
    }
    assert_eq!(plain.keys(), packed.keys());
    packed.check_invariants().unwrap();
}

#[test]
fn compressed_matches_plain() {
    differential::<GammaLeaf>(1);
    differential::<DeltaLeaf>(2);
}

#[test]
fn compressed_rejects_duplicates() {
    let mut t: Tree<GammaLeaf, Natural> = Tree::build(tiny(), Natural, false, None).unwrap();
    t.insert(4).unwrap();
    assert_eq!(t.insert(4), Err(sbtree::Error::Duplicate));
}
