use std::collections::BTreeMap;

use proptest::prelude::*;

use sbtree::{AggMode, AggregateSpec, Tree, TreeParams};

#[derive(Debug, Clone)]
enum Op {
    Insert(u64, u64),
    Delete(u64),
}

fn ops() -> impl Strategy<Value = Vec<Op>> {
    let op = prop_oneof![
        3 => (0u64..300, 0u64..1000).prop_map(|(k, v)| Op::Insert(k, v)),
        2 => (0u64..300).prop_map(Op::Delete),
    ];
    prop::collection::vec(op, 0..400)
}

fn params() -> impl Strategy<Value = TreeParams> {
    (3usize..6, 3usize..6, 3usize..9)
        .prop_map(|(t, q, b)| TreeParams::for_capacity(1 << 10, 16).with_t(t).with_q(q).with_b(b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sorted_and_invariant(p in params(), ops in ops()) {
        let mut tree = Tree::new(p).unwrap();
        let mut model: Vec<u64> = Vec::new();
        for op in ops {
            match op {
                Op::Insert(k, _) => {
                    tree.insert(k).unwrap();
                    let at = model.partition_point(|&x| x <= k);
                    model.insert(at, k);
                }
                Op::Delete(k) => {
                    let had = model.iter().position(|&x| x == k);
                    prop_assert_eq!(tree.delete(k).is_ok(), had.is_some());
                    if let Some(i) = had {
                        model.remove(i);
                    }
                }
            }
            prop_assert_eq!(tree.check_invariants(), Ok(()));
        }
        prop_assert_eq!(tree.keys(), model);
    }

    #[test]
    fn aggregates_match(p in params(), ops in ops(), merge in any::<bool>(), lo in 0u64..300, w in 0u64..300) {
        let mode = if merge { AggMode::Merge } else { AggMode::Batch };
        let mut tree = Tree::with_aggregate(p, AggregateSpec::Sum, mode).unwrap();
        let mut model = BTreeMap::new();
        for op in ops {
            match op {
                Op::Insert(k, v) => {
                    if model.insert(k, v).is_some() {
                        tree.set_value(k, v).unwrap();
                    } else {
                        tree.insert_with_value(k, v).unwrap();
                    }
                }
                Op::Delete(k) => {
                    prop_assert_eq!(tree.delete(k).is_ok(), model.remove(&k).is_some());
                }
            }
            prop_assert_eq!(tree.check_invariants(), Ok(()));
        }
        let hi = lo + w;
        let expect: u64 = model.range(lo..=hi).map(|(_, v)| v).sum();
        prop_assert_eq!(tree.range_aggregate(lo, hi).unwrap(), expect);
    }
}
