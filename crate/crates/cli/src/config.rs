//! `key = value` run configuration.
//!
//! ```text
//! # comments run to the end of the line
//! step_budget = 15        # degrees of pose change per reenactment step
//! steps = 3               # fixed step count, overrides step_budget
//! prune_radius = 5
//! blur_threshold = -0.001 # drop views whose blur score exceeds this
//! tol = 1e-6
//! hair_free = false
//! symmetry = 1 0 2        # landmark mirror permutation
//! coverage_min = 0.15
//! frame_cap = 100
//! timeout_secs = 30
//! seed = 0
//! gen_r = mock:echo
//! gen_s = mock:echo:ellipse:0.5,0.5,0.3,0.35,0.2
//! gen_c = mock:fill
//! gen_b = exec:fsg-echo-peer
//! ```

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use fsg_core::curation::{DEFAULT_COVERAGE_MIN, DEFAULT_FRAME_CAP};
use fsg_core::pipeline::external::DEFAULT_TIMEOUT;
use fsg_core::pipeline::SwapConfig;

use crate::Invalid;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub swap: SwapConfig,
    pub coverage_min: f64,
    pub frame_cap: usize,
    pub timeout: Duration,
    pub seed: u64,
    pub gen_r: String,
    pub gen_s: String,
    pub gen_c: String,
    pub gen_b: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            swap: SwapConfig::default(),
            coverage_min: DEFAULT_COVERAGE_MIN,
            frame_cap: DEFAULT_FRAME_CAP,
            timeout: DEFAULT_TIMEOUT,
            seed: 0,
            gen_r: "mock:echo".into(),
            gen_s: "mock:echo".into(),
            gen_c: "mock:fill".into(),
            gen_b: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Invalid(format!("config key {key}: cannot parse {v:?}")).into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Invalid(format!("config line {}: expected key = value", n + 1)))?;
            let (key, v) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), n + 1).is_some() {
                bail!(Invalid(format!("config key {key} given twice")));
            }
            match key {
                "step_budget" => cfg.swap.step_budget = num(key, v)?,
                "steps" => cfg.swap.steps = Some(num(key, v)?),
                "prune_radius" => cfg.swap.prune_radius = num(key, v)?,
                "blur_threshold" => cfg.swap.blur_threshold = Some(num(key, v)?),
                "tol" => cfg.swap.tol = num(key, v)?,
                "hair_free" => cfg.swap.hair_free = num(key, v)?,
                "symmetry" => {
                    cfg.swap.symmetry = Some(
                        v.split_whitespace()
                            .map(|t| num(key, t))
                            .collect::<Result<_>>()?,
                    )
                }
                "coverage_min" => cfg.coverage_min = num(key, v)?,
                "frame_cap" => cfg.frame_cap = num(key, v)?,
                "timeout_secs" => cfg.timeout = Duration::from_secs_f64(num(key, v)?),
                "seed" => cfg.seed = num(key, v)?,
                "gen_r" => cfg.gen_r = v.to_string(),
                "gen_s" => cfg.gen_s = v.to_string(),
                "gen_c" => cfg.gen_c = v.to_string(),
                "gen_b" => cfg.gen_b = Some(v.to_string()),
                _ => bail!(Invalid(format!(
                    "unknown config key {key:?} on line {}",
                    n + 1
                ))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.swap.validate()?;
        if !(0.0..=1.0).contains(&self.coverage_min) {
            bail!(Invalid(format!(
                "coverage_min {} outside [0, 1]",
                self.coverage_min
            )));
        }
        if self.frame_cap == 0 {
            bail!(Invalid("frame_cap must be at least 1".into()));
        }
        if self.timeout.is_zero() {
            return Err(anyhow!(Invalid("timeout_secs must be positive".into())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys() {
        let cfg = RunConfig::parse(
            "steps = 2 # fixed\nsymmetry = 1 0 2\nhair_free = true\ngen_b = mock:echo\n",
        )
        .unwrap();
        assert_eq!(cfg.swap.steps, Some(2));
        assert_eq!(cfg.swap.symmetry, Some(vec![1, 0, 2]));
        assert!(cfg.swap.hair_free);
        assert_eq!(cfg.gen_b.as_deref(), Some("mock:echo"));
        assert_eq!(cfg.frame_cap, 100);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("tol = -1").is_err());
        assert!(RunConfig::parse("tol = 1\ntol = 2").is_err());
        assert!(RunConfig::parse("tol").is_err());
    }
}
