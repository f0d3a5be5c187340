//! Run configuration: a flat `key = value` file with `#` comments, overridable
//! from the command line.
//!
//! Recognised keys:
//!
//! ```text
//! seed = 42
//! tol.<check-name> = 1e-6      # threshold override for one check
//! fd.metric = 1e-4             # relative step for metric derivatives
//! fd.second = 1e-3             # divergence second-order mixed partials
//! fd.third = 1e-2              # divergence third-order mixed partials
//! timings = true               # include runtime_ms in reports
//! anything.else = value        # kept as a model parameter
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use infogeo_core::{DivergenceSteps, FdStep};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub fd_steps: BTreeMap<String, f64>,
    pub params: BTreeMap<String, String>,
    pub timings: bool,
}

fn positive(key: &str, raw: &str) -> Result<f64, CliError> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{key}: `{raw}` is not a number")))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{key}: must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig {
            seed: DEFAULT_SEED,
            ..Default::default()
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "config line {}: expected `key = value`",
                    lineno + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if key.is_empty() {
            return Err(CliError::Usage("empty config key".into()));
        }
        if key == "seed" {
            self.seed = value.parse().map_err(|_| {
                CliError::Usage(format!("seed: `{value}` is not an unsigned integer"))
            })?;
        } else if key == "timings" {
            self.timings = value
                .parse()
                .map_err(|_| CliError::Usage(format!("timings: `{value}` is not true/false")))?;
        } else if let Some(name) = key.strip_prefix("tol.") {
            self.tolerances
                .insert(name.to_string(), positive(key, value)?);
        } else if let Some(order) = key.strip_prefix("fd.") {
            if !matches!(order, "metric" | "second" | "third") {
                return Err(CliError::Usage(format!(
                    "unknown finite-difference order `{order}`"
                )));
            }
            self.fd_steps
                .insert(order.to_string(), positive(key, value)?);
        } else {
            self.params.insert(key.to_string(), value.to_string());
        }
        Ok(())
    }

    /// Applies a `--tol name=value` flag.
    pub fn set_tolerance(&mut self, spec: &str) -> Result<(), CliError> {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--tol expects name=value, got `{spec}`")))?;
        self.set(&format!("tol.{}", name.trim()), value.trim())
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    pub fn metric_step(&self) -> FdStep {
        self.fd_steps
            .get("metric")
            .map(|&h| FdStep::new(h))
            .unwrap_or_default()
    }

    pub fn divergence_steps(&self) -> DivergenceSteps {
        let d = DivergenceSteps::default();
        DivergenceSteps {
            second: self.fd_steps.get("second").copied().unwrap_or(d.second),
            third: self.fd_steps.get("third").copied().unwrap_or(d.third),
        }
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_sections() {
        let cfg = RunConfig::parse(
            "# run settings\nseed = 7\ntol.simplex/duality = 1e-6  # tighter\nfd.third=5e-3\nwarp.kind = linear\n\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.tolerance("simplex/duality", 1.0), 1e-6);
        assert_eq!(cfg.divergence_steps().third, 5e-3);
        assert_eq!(cfg.divergence_steps().second, 1e-3);
        assert_eq!(cfg.param("warp.kind"), Some("linear"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("seed 7").is_err());
        assert!(RunConfig::parse("seed = -1").is_err());
        assert!(RunConfig::parse("tol.x = 0").is_err());
        assert!(RunConfig::parse("tol.x = abc").is_err());
        assert!(RunConfig::parse("fd.fourth = 1e-2").is_err());
        let mut cfg = RunConfig::default();
        assert!(cfg.set_tolerance("no-equals").is_err());
        cfg.set_tolerance("a=2").unwrap();
        assert_eq!(cfg.tolerance("a", 1.0), 2.0);
    }
}
