mod anytree;
mod bench;
mod config;
mod input;
mod verify;

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use sbtree::suffix::{Comparator, SparseSuffixIndex, Text};
use sbtree::{AggMode, Counters, Error, TreeStats};

use anytree::AnyTree;
use config::{Format, RunConfig};
use input::Source;

#[derive(Parser)]
#[command(name = "sbtree", version, about = "Load-balancing succinct B+ tree tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a tree or sparse suffix index and write a JSON report.
    Build(RunConfig),
    /// Build and print space statistics.
    Stats(RunConfig),
    /// Build and write the contents as CSV.
    Dump(RunConfig),
    /// Run the randomized oracle and invariant suite.
    Verify(verify::VerifyArgs),
    /// Time updates and predecessor queries at several sizes.
    Bench(bench::BenchArgs),
}

#[derive(Serialize)]
struct BuildReport<'a> {
    config: &'a RunConfig,
    kind: &'static str,
    stats: TreeStats,
    counters: Counters,
    rejected: usize,
    root_aggregate: Option<u64>,
}

enum Built {
    Keys { tree: AnyTree, rejected: usize },
    Suffixes(SparseSuffixIndex),
}

/// Bits for positions and lcps of a text of length `n`.
fn width_for(n: usize) -> u32 {
    (usize::BITS - n.leading_zeros()).max(1)
}

fn build(cfg: &RunConfig) -> Result<Built> {
    match input::source(cfg)? {
        None => bail!("nothing to build: pass --in, --in with --positions, or --fixture"),
        Some(Source::Keys(path)) => {
            let k = cfg.k.unwrap_or(32);
            let keys = input::read_keys(&path, cfg.format.unwrap_or(Format::Text), k)?;
            let params = cfg.params(keys.len() as u64, k);
            let compressed = cfg.compressed.then_some(cfg.code);
            let mut tree = AnyTree::new(params, compressed, cfg.aggregate())?;
            let mask = if params.value_width >= 64 { u64::MAX } else { (1 << params.value_width) - 1 };
            let mut rejected = 0;
            for (key, value) in keys {
                match tree.insert(key, value.unwrap_or(key & mask)) {
                    Ok(()) => {}
                    Err(Error::Duplicate) => rejected += 1,
                    Err(e) => return Err(e).with_context(|| format!("inserting key {key}")),
                }
            }
            Ok(Built::Keys { tree, rejected })
        }
        Some(Source::Suffixes { text, positions }) => {
            let text = Text::new(input::read_text(&text)?);
            let positions = input::read_positions(&positions)?;
            let k = cfg.k.unwrap_or(width_for(text.len()));
            let params = cfg.params(positions.len() as u64, k).with_value_width(k);
            let mode = cfg.mode.map_or(AggMode::Merge, Into::into);
            let mut idx = SparseSuffixIndex::with_params(text, params, mode, Comparator::Fast)?;
            for p in positions {
                idx.insert(p).with_context(|| format!("inserting position {p}"))?;
            }
            Ok(Built::Suffixes(idx))
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn cmd_build(cfg: &RunConfig) -> Result<()> {
    let report = match build(cfg)? {
        Built::Keys { tree, rejected } => BuildReport {
            config: cfg,
            kind: "keys",
            stats: tree.stats(),
            counters: tree.counters(),
            rejected,
            root_aggregate: tree.root_aggregate().ok(),
        },
        Built::Suffixes(idx) => BuildReport {
            config: cfg,
            kind: "suffix",
            stats: idx.tree().stats(),
            counters: idx.tree().counters().clone(),
            rejected: 0,
            root_aggregate: None,
        },
    };
    let mut s = serde_json::to_string_pretty(&report)?;
    s.push('\n');
    emit(cfg.out.as_deref(), s.as_bytes())
}

fn cmd_stats(cfg: &RunConfig) -> Result<()> {
    let stats = match build(cfg)? {
        Built::Keys { tree, .. } => tree.stats(),
        Built::Suffixes(idx) => idx.tree().stats(),
    };
    let mut s = String::new();
    if let serde_json::Value::Object(m) = serde_json::to_value(&stats)? {
        for (name, v) in m {
            s.push_str(&format!("{name:<16} {v}\n"));
        }
    }
    emit(cfg.out.as_deref(), s.as_bytes())
}

fn cmd_dump(cfg: &RunConfig) -> Result<()> {
    let mut buf = Vec::new();
    match build(cfg)? {
        Built::Keys { tree, .. } => {
            writeln!(buf, "rank,key,value")?;
            for (i, (k, v)) in tree.keys().into_iter().zip(tree.values()).enumerate() {
                writeln!(buf, "{},{k},{v}", i + 1)?;
            }
        }
        Built::Suffixes(idx) => idx.write_csv(&mut buf)?,
    }
    emit(cfg.out.as_deref(), &buf)
}

fn main() {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Build(c) => cmd_build(c),
        Command::Stats(c) => cmd_stats(c),
        Command::Dump(c) => cmd_dump(c),
        Command::Verify(a) => verify::run(a),
        Command::Bench(a) => bench::run(a),
    };
    match res {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
