use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tocq::smoothing::{ConstrainedConfig, SmoothingConfig};
use tocq::state_prep::StatePrepConfig;
use tocq::xgate::XgateConfig;

use crate::Invalid;

/// Everything a TOML config file may set. Missing tables and keys keep
/// their defaults; command-line flags are applied on top.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: u64,
    pub state_prep: StatePrepConfig,
    pub xgate: XgateConfig,
    pub smoothing: SmoothingConfig,
    pub constrained: ConstrainedConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| Invalid(format!("{}: {e}", path.display())).into())
    }

    /// Push the root seed into every module config.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.state_prep.seed = seed;
        self.smoothing.seed = seed;
    }
}

/// Angle in radians, or a multiple of π written `0.7pi` / `0.7π`.
pub fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    let (num, scale) = match t.strip_suffix("pi").or_else(|| t.strip_suffix('π')) {
        Some(n) => (n.trim(), std::f64::consts::PI),
        None => (t, 1.0),
    };
    let v = if num.is_empty() {
        1.0
    } else {
        num.parse::<f64>().map_err(|_| format!("bad angle `{s}`"))?
    };
    let v = v * scale;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("bad angle `{s}`"))
    }
}

/// `lo:hi:n` grid, n ≥ 1 points including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

pub fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<_> = s.split(':').collect();
    let bad = || format!("bad grid `{s}` (expected lo:hi:n)");
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(bad());
    }
    Ok(Grid { lo, hi, n })
}

/// `lo:hi` interval.
pub fn parse_bracket(s: &str) -> std::result::Result<(f64, f64), String> {
    let bad = || format!("bad interval `{s}` (expected lo:hi)");
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.parse().map_err(|_| bad())?;
    let hi: f64 = b.parse().map_err(|_| bad())?;
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok((lo, hi))
    } else {
        Err(bad())
    }
}

/// Independent per-task seed from the root seed (splitmix64).
pub fn task_seed(root: u64, index: usize) -> u64 {
    let mut z = root.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
