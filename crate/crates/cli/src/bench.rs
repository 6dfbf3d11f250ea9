//! Timing of updates and predecessor queries.

use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sbtree::{AggMode, AggregateSpec, Counters, TreeParams, TreeStats};

use crate::anytree::AnyTree;
use crate::config::{Format, RunConfig};
use crate::input;

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub cfg: RunConfig,
    /// Sizes as powers of two, comma separated. Ignored with --in.
    #[arg(long, value_delimiter = ',', default_values_t = [16u32, 18, 20])]
    pub sizes: Vec<u32>,
    /// Timed repetitions of the predecessor pass; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
}

#[derive(Serialize)]
struct Row {
    n: usize,
    params: TreeParams,
    aggregate: Option<String>,
    insert_ns: f64,
    predecessor_ns: f64,
    delete_ns: f64,
    stats: TreeStats,
    counters: Counters,
    /// Bound on distinct leaves touched by one update.
    leaves_touched_limit: usize,
    leaves_touched_ok: bool,
}

fn per_op(start: Instant, n: usize) -> f64 {
    start.elapsed().as_nanos() as f64 / n.max(1) as f64
}

fn run_one(cfg: &RunConfig, keys: &[u64], k: u32, reps: usize, rng: &mut ChaCha8Rng) -> Result<Row> {
    let n = keys.len();
    let params = cfg.params(n as u64, k);
    params.validate()?;
    let agg = cfg.aggregate().or(Some((AggregateSpec::Min, AggMode::Merge)));
    let agg = if cfg.compressed { None } else { agg };
    let mut tree = AnyTree::new(params, cfg.compressed.then_some(cfg.code), agg)?;
    let mask = if params.value_width >= 64 { u64::MAX } else { (1 << params.value_width) - 1 };

    let start = Instant::now();
    for &key in keys {
        tree.insert(key, key & mask)?;
    }
    let insert_ns = per_op(start, n);
    let stats = tree.stats();

    let queries: Vec<u64> = (0..n).map(|_| rng.gen::<u64>() & ((1u64 << k.min(63)) - 1)).collect();
    let mut times = Vec::with_capacity(reps);
    let mut sink = 0u64;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        for &x in &queries {
            sink = sink.wrapping_add(tree.predecessor(x).unwrap_or(0));
        }
        times.push(per_op(start, n));
    }
    std::hint::black_box(sink);
    times.sort_by(f64::total_cmp);
    let predecessor_ns = times[times.len() / 2];

    let mut order = keys.to_vec();
    order.shuffle(rng);
    let start = Instant::now();
    for key in order {
        tree.delete(key)?;
    }
    let delete_ns = per_op(start, n);
    tree.check_invariants()?;

    let counters = tree.counters();
    let limit = params.q + 2;
    Ok(Row {
        n,
        params,
        aggregate: agg.map(|(s, m)| format!("{s}/{m:?}").to_lowercase()),
        insert_ns,
        predecessor_ns,
        delete_ns,
        stats,
        leaves_touched_ok: counters.max_leaves_touched <= limit,
        leaves_touched_limit: limit,
        counters,
    })
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let cfg = &args.cfg;
    let k = cfg.k.unwrap_or(32);
    if !(1..=64).contains(&k) {
        bail!("--k must be between 1 and 64");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let datasets: Vec<Vec<u64>> = match &cfg.input {
        Some(path) => {
            let mut keys: Vec<u64> =
                input::read_keys(path, cfg.format.unwrap_or(Format::Binary), k)?.into_iter().map(|(x, _)| x).collect();
            keys.sort_unstable();
            keys.dedup();
            keys.shuffle(&mut rng);
            vec![keys]
        }
        None => args
            .sizes
            .iter()
            .map(|&s| {
                let n = 1usize << s;
                let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
                let mut seen = std::collections::HashSet::with_capacity(n);
                let mut keys = Vec::with_capacity(n);
                while keys.len() < n {
                    let x = rng.gen::<u64>() & mask;
                    if seen.insert(x) {
                        keys.push(x);
                    }
                }
                keys
            })
            .collect(),
    };
    for keys in &datasets {
        let row = run_one(cfg, keys, k, args.reps, &mut rng)?;
        eprintln!(
            "n={} insert {:.0} ns, predecessor {:.0} ns, delete {:.0} ns",
            row.n, row.insert_ns, row.predecessor_ns, row.delete_ns
        );
        rows.push(row);
    }
    let s = serde_json::to_string_pretty(&rows)? + "\n";
    match &cfg.out {
        Some(p) => std::fs::write(p, s)?,
        None => print!("{s}"),
    }
    Ok(())
}
