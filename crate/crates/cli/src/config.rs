//! Flat key=value config files with CLI-flag overrides; flags win.

use anyhow::{bail, Context, Result};
use boxassort::analytics::TuningParams;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const KNOWN_KEYS: &[&str] = &[
    "boxes",
    "skus",
    "orders",
    "baseline",
    "out",
    "k",
    "rho",
    "delta",
    "alpha",
    "grid",
    "seed",
    "threads",
    "train_fraction",
    "validation_fraction",
    "test_fraction",
    "em_max_iter",
];

/// Raw key/value pairs from a config file.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected 'key = value', got '{raw}'",
                    path.display(),
                    lineno + 1
                );
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!(
                    "{}:{}: unknown config key '{key}'",
                    path.display(),
                    lineno + 1
                );
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Resolve an optional flag against the config file; the flag wins.
pub fn resolve<T: Clone>(
    flag: &Option<T>,
    config: &ConfigFile,
    key: &str,
    parse: impl Fn(&str) -> Result<T>,
) -> Result<Option<T>> {
    if let Some(v) = flag {
        return Ok(Some(v.clone()));
    }
    match config.get(key) {
        Some(raw) => {
            Ok(Some(parse(raw).with_context(|| {
                format!("config key '{key}' = '{raw}'")
            })?))
        }
        None => Ok(None),
    }
}

pub fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.with_context(|| format!("missing required input: {what} (flag or config key)"))
}

pub fn parse_path(raw: &str) -> Result<PathBuf> {
    Ok(PathBuf::from(raw))
}

pub fn parse_f64(raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .with_context(|| format!("'{raw}' is not a number"))
}

pub fn parse_u64(raw: &str) -> Result<u64> {
    raw.parse::<u64>()
        .with_context(|| format!("'{raw}' is not a non-negative integer"))
}

pub fn parse_usize(raw: &str) -> Result<usize> {
    raw.parse::<usize>()
        .with_context(|| format!("'{raw}' is not a non-negative integer"))
}

/// Parse a grid spec of the form
/// `rho=0.25,0.5;delta=0,1,2;alpha=0,1` into the cartesian product,
/// rho-major.
pub fn parse_grid(raw: &str) -> Result<Vec<TuningParams>> {
    let mut rhos: Option<Vec<f64>> = None;
    let mut deltas: Option<Vec<f64>> = None;
    let mut alphas: Option<Vec<f64>> = None;
    for part in raw.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let Some((name, list)) = part.split_once('=') else {
            bail!("grid part '{part}' is not 'name=v1,v2,...'");
        };
        let values: Vec<f64> = list
            .split(',')
            .map(|v| parse_f64(v.trim()))
            .collect::<Result<_>>()?;
        if values.is_empty() {
            bail!("grid part '{part}' lists no values");
        }
        match name.trim() {
            "rho" => rhos = Some(values),
            "delta" => deltas = Some(values),
            "alpha" => alphas = Some(values),
            other => bail!("unknown grid axis '{other}' (expected rho, delta, alpha)"),
        }
    }
    let (rhos, deltas, alphas) = (
        rhos.context("grid spec must list rho values")?,
        deltas.context("grid spec must list delta values")?,
        alphas.context("grid spec must list alpha values")?,
    );
    let mut grid = Vec::with_capacity(rhos.len() * deltas.len() * alphas.len());
    for &rho in &rhos {
        for &delta in &deltas {
            for &alpha in &alphas {
                grid.push(TuningParams::new(rho, delta, alpha)?);
            }
        }
    }
    Ok(grid)
}

/// Stable hash of the semantic configuration (inputs and parameters; the
/// output directory and thread count are execution details and excluded).
pub fn config_hash(echo: &BTreeMap<String, String>) -> String {
    let mut text = String::new();
    for (k, v) in echo {
        let _ = writeln!(text, "{k}={v}");
    }
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in text.bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_cartesian_product() {
        let grid = parse_grid("rho=0.25,0.5;delta=0,1;alpha=2").unwrap();
        assert_eq!(grid.len(), 4);
        assert_eq!(grid[0].rho, 0.25);
        assert_eq!(grid[1].delta, 1.0);
        assert!(grid.iter().all(|p| p.alpha == 2.0));
    }

    #[test]
    fn grid_spec_requires_all_axes() {
        assert!(parse_grid("rho=0.5;delta=0").is_err());
        assert!(parse_grid("rho=0.5;delta=0;alpha=").is_err());
    }

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# run\nk = 5\nseed=9\nrho = 0.5\n").unwrap();
        let config = ConfigFile::load(&path).unwrap();
        assert_eq!(config.get("k"), Some("5"));
        assert_eq!(config.get("seed"), Some("9"));
        assert_eq!(config.get("missing"), None);
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "topk = 5\n").unwrap();
        assert!(ConfigFile::load(&path).is_err());
    }
}
