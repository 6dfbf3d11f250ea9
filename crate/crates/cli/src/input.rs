use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::config::{Format, RunConfig};

/// Overrides the fixture directory.
pub const FIXTURE_ENV: &str = "SBTREE_FIXTURES";

pub fn fixture_dir() -> PathBuf {
    match std::env::var_os(FIXTURE_ENV) {
        Some(d) => PathBuf::from(d),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/v1"),
    }
}

/// Paths of a named fixture: text, positions and expected CSV.
pub fn fixture_paths(name: &str) -> (PathBuf, PathBuf, PathBuf) {
    let d = fixture_dir();
    (d.join(format!("{name}.txt")), d.join(format!("{name}.positions")), d.join(format!("{name}.csv")))
}

/// What a command should build from.
pub enum Source {
    Keys(PathBuf),
    Suffixes { text: PathBuf, positions: PathBuf },
}

pub fn source(cfg: &RunConfig) -> Result<Option<Source>> {
    if let Some(name) = &cfg.fixture {
        let (text, positions, _) = fixture_paths(name);
        return Ok(Some(Source::Suffixes { text, positions }));
    }
    Ok(match (&cfg.input, &cfg.positions) {
        (Some(t), Some(p)) => Some(Source::Suffixes { text: t.clone(), positions: p.clone() }),
        (Some(k), None) => Some(Source::Keys(k.clone())),
        (None, Some(_)) => bail!("--positions needs --in naming the text"),
        (None, None) => None,
    })
}

/// Keys with optional values.
pub fn read_keys(path: &Path, format: Format, k: u32) -> Result<Vec<(u64, Option<u64>)>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    match format {
        Format::Text => parse_text_keys(&String::from_utf8(bytes).context("key file is not UTF-8")?),
        Format::Binary => {
            let w = (k as usize).div_ceil(8);
            if bytes.len() % w != 0 {
                bail!("binary key file length {} is not a multiple of {w}", bytes.len());
            }
            Ok(bytes
                .chunks(w)
                .map(|c| {
                    let mut buf = [0u8; 8];
                    buf[..w].copy_from_slice(c);
                    (u64::from_le_bytes(buf), None)
                })
                .collect())
        }
    }
}

fn parse_text_keys(s: &str) -> Result<Vec<(u64, Option<u64>)>> {
    let mut out = Vec::new();
    for (i, line) in s.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty());
        let key = parts.next().unwrap_or_default();
        let key: u64 = key.parse().with_context(|| format!("line {}: bad key {key:?}", i + 1))?;
        let value = match parts.next() {
            Some(v) => Some(v.parse().with_context(|| format!("line {}: bad value {v:?}", i + 1))?),
            None => None,
        };
        out.push((key, value));
    }
    Ok(out)
}

#[cfg(test)]
fn write_binary_keys(keys: &[u64], k: u32) -> Vec<u8> {
    let w = (k as usize).div_ceil(8);
    keys.iter().flat_map(|x| x.to_le_bytes()[..w].to_vec()).collect()
}

pub fn read_text(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_positions(path: &Path) -> Result<Vec<usize>> {
    let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    s.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse().with_context(|| format!("line {}: bad position {l:?}", i + 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_keys() {
        let v = parse_text_keys("5\n# note\n\n7 70\n9,90\n").unwrap();
        assert_eq!(v, vec![(5, None), (7, Some(70)), (9, Some(90))]);
        assert!(parse_text_keys("x\n").is_err());
    }

    #[test]
    fn binary_roundtrip() {
        let dir = std::env::temp_dir().join(format!("sbtree-bin-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("k.bin");
        fs::write(&p, write_binary_keys(&[1, 300, 70000], 20)).unwrap();
        let v = read_keys(&p, Format::Binary, 20).unwrap();
        assert_eq!(v, vec![(1, None), (300, None), (70000, None)]);
        fs::remove_dir_all(dir).unwrap();
    }
}
