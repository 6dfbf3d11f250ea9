use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbtree::{AggMode, AggregateSpec, Tree, TreeParams};

fn small(t: usize, q: usize, b: usize) -> TreeParams {
    TreeParams::for_capacity(1 << 10, 16).with_t(t).with_q(q).with_b(b).with_value_width(16)
}

/// Sorted multiset as key -> multiplicity.
#[derive(Default)]
struct Multiset(BTreeMap<u64, usize>);

impl Multiset {
    fn insert(&mut self, k: u64) {
        *self.0.entry(k).or_default() += 1;
    }

    fn remove(&mut self, k: u64) -> bool {
        match self.0.get_mut(&k) {
            Some(c) if *c > 1 => {
                *c -= 1;
                true
            }
            Some(_) => {
                self.0.remove(&k);
                true
            }
            None => false,
        }
    }

    fn predecessor(&self, k: u64) -> Option<u64> {
        self.0.range(..=k).next_back().map(|(&k, _)| k)
    }

    fn to_vec(&self) -> Vec<u64> {
        self.0.iter().flat_map(|(&k, &c)| std::iter::repeat(k).take(c)).collect()
    }
}

fn run_mixed(params: TreeParams, ops: usize, universe: u64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tree = Tree::new(params).unwrap();
    let mut oracle = Multiset::default();
    for step in 0..ops {
        let key = rng.gen_range(0..universe);
        match rng.gen_range(0..10) {
            0..=4 => {
                tree.insert(key).unwrap();
                oracle.insert(key);
            }
            5..=7 => {
                let expected = oracle.remove(key);
                assert_eq!(tree.delete(key).is_ok(), expected, "step {step}: delete {key}");
            }
            _ => assert_eq!(tree.predecessor(key), oracle.predecessor(key), "step {step}: predecessor {key}"),
        }
        if let Err(v) = tree.check_invariants() {
            panic!("step {step}: {v}");
        }
    }
    assert_eq!(tree.keys(), oracle.to_vec());
}

#[test]
fn mixed_ops_small_parameters() {
    for (seed, (t, q, b)) in [(3, 3, 2), (3, 3, 4), (4, 4, 5), (5, 6, 8), (16, 10, 12)].into_iter().enumerate() {
        run_mixed(small(t, q, b), 4000, 300, seed as u64);
        run_mixed(small(t, q, b), 4000, 5000, 100 + seed as u64);
    }
}

#[test]
fn insert_then_drain() {
    let mut tree = Tree::new(small(3, 3, 3)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut keys: Vec<u64> = (0..2000).map(|_| rng.gen_range(0..10_000)).collect();
    for &k in &keys {
        tree.insert(k).unwrap();
    }
    tree.check_invariants().unwrap();
    keys.sort_unstable();
    assert_eq!(tree.keys(), keys);
    while let Some(k) = keys.pop() {
        tree.delete(k).unwrap();
        tree.check_invariants().unwrap();
    }
    assert!(tree.is_empty());
    assert_eq!(tree.height(), 1);
}

fn run_aggregates(mode: AggMode, spec: AggregateSpec, params: TreeParams, ops: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tree = Tree::with_aggregate(params, spec, mode).unwrap();
    let mut oracle: BTreeMap<u64, u64> = BTreeMap::new();
    for step in 0..ops {
        let key = rng.gen_range(0..2000u64);
        if rng.gen_bool(0.6) {
            if !oracle.contains_key(&key) {
                let v = rng.gen_range(0..60_000);
                tree.insert_with_value(key, v).unwrap();
                oracle.insert(key, v);
            }
        } else if oracle.remove(&key).is_some() {
            tree.delete(key).unwrap();
        }
        if let Err(v) = tree.check_invariants() {
            panic!("step {step}: {v}");
        }
        let lo = rng.gen_range(0..2000u64);
        let hi = rng.gen_range(lo..2000u64);
        let expected = spec.eval(&oracle.range(lo..=hi).map(|(_, &v)| v).collect::<Vec<_>>());
        assert_eq!(tree.range_aggregate(lo, hi).unwrap(), expected, "step {step}: [{lo}, {hi}]");
    }
}

#[test]
fn aggregates_both_modes() {
    for mode in [AggMode::Batch, AggMode::Merge] {
        for (i, spec) in [AggregateSpec::Min, AggregateSpec::Sum, AggregateSpec::Max].into_iter().enumerate() {
            run_aggregates(mode, spec, small(3, 3, 4), 3000, i as u64);
            run_aggregates(mode, spec, small(5, 5, 8), 3000, 10 + i as u64);
        }
    }
}
