use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use sbtree::{AggMode, AggregateSpec, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Batch,
    Merge,
}

impl From<Mode> for AggMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Batch => AggMode::Batch,
            Mode::Merge => AggMode::Merge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Sum,
    Min,
    Max,
}

impl From<Aggregate> for AggregateSpec {
    fn from(a: Aggregate) -> Self {
        match a {
            Aggregate::Sum => AggregateSpec::Sum,
            Aggregate::Min => AggregateSpec::Min,
            Aggregate::Max => AggregateSpec::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Code {
    Gamma,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// One decimal key per line, optionally followed by a value.
    Text,
    /// Little-endian records of ceil(k/8) bytes.
    Binary,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunConfig {
    /// Maximum internal node degree.
    #[arg(long)]
    pub t: Option<usize>,
    /// Sibling window width.
    #[arg(long)]
    pub q: Option<usize>,
    /// Leaf capacity in keys.
    #[arg(long)]
    pub b: Option<usize>,
    /// Key width in bits.
    #[arg(long)]
    pub k: Option<u32>,
    /// Capacity hint the defaults for q and b derive from.
    #[arg(long)]
    pub n0: Option<u64>,
    /// Aggregate maintenance mode; enables aggregates.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Aggregate function (default min when --mode is given).
    #[arg(long, value_enum)]
    pub aggregate: Option<Aggregate>,
    /// Store leaf keys difference-coded.
    #[arg(long)]
    pub compressed: bool,
    /// Gap code for --compressed.
    #[arg(long, value_enum, default_value_t = Code::Gamma)]
    pub code: Code,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Key file, or the text when --positions is given.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Suffix start positions, one 1-based decimal per line.
    #[arg(long)]
    pub positions: Option<PathBuf>,
    /// Named fixture from the fixture directory, in place of --in/--positions.
    #[arg(long)]
    pub fixture: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Key file format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl RunConfig {
    /// Aggregate settings, if any were requested.
    pub fn aggregate(&self) -> Option<(AggregateSpec, AggMode)> {
        match (self.aggregate, self.mode) {
            (None, None) => None,
            (a, m) => Some((a.unwrap_or(Aggregate::Min).into(), m.unwrap_or(Mode::Merge).into())),
        }
    }

    /// Tree parameters: defaults from the capacity hint, then overrides.
    pub fn params(&self, n_hint: u64, k_default: u32) -> TreeParams {
        let k = self.k.unwrap_or(k_default);
        let mut p = TreeParams::for_capacity(self.n0.unwrap_or(n_hint.max(2)), k);
        if let Some(t) = self.t {
            p = p.with_t(t);
        }
        if let Some(q) = self.q {
            p = p.with_q(q);
        }
        if let Some(b) = self.b {
            p = p.with_b(b);
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let c = RunConfig {
            t: Some(8),
            q: None,
            b: Some(40),
            k: Some(32),
            n0: Some(1 << 20),
            mode: Some(Mode::Batch),
            aggregate: Some(Aggregate::Sum),
            compressed: true,
            code: Code::Delta,
            seed: 9,
            input: Some("keys.txt".into()),
            positions: None,
            fixture: None,
            out: Some("r.json".into()),
            format: Some(Format::Binary),
        };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&s).unwrap(), c);
    }

    #[test]
    fn params_overrides() {
        let mut c: RunConfig = serde_json::from_str(
            r#"{"t":null,"q":null,"b":null,"k":null,"n0":null,"mode":null,"aggregate":null,
                "compressed":false,"code":"gamma","seed":1,"input":null,"positions":null,
                "fixture":null,"out":null,"format":null}"#,
        )
        .unwrap();
        assert_eq!(c.params(1 << 20, 32).b, 40);
        c.q = Some(5);
        assert_eq!(c.params(1 << 20, 32).q, 5);
        assert!(c.aggregate().is_none());
        c.mode = Some(Mode::Batch);
        assert_eq!(c.aggregate(), Some((AggregateSpec::Min, AggMode::Batch)));
    }
}
