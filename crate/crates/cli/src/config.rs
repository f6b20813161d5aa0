//! The JSON run configuration. Every key is optional; each subcommand fills
//! what it needs from defaults and rejects keys it does not know.

use std::path::Path;

use anyhow::{bail, Context, Result};
use levy_core::harness::{BuiltinChannel, Check, Mutation, PriorSpec};
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// `count` SNRs from `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default = "linear")]
    pub spacing: Spacing,
}

fn linear() -> Spacing {
    Spacing::Linear
}

impl GammaRange {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 || !(self.start > 0.0) || !(self.stop >= self.start) || !self.stop.is_finite() {
            bail!("gamma_range needs 0 < start <= stop < inf and count >= 1, got {self:?}");
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let n = (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| {
                let t = i as f64 / n;
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect())
    }
}

/// Monte Carlo cross-check of the mutual information at each SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarlo {
    pub samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<BuiltinChannel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PriorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<PriorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_range: Option<GammaRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Vec<Check>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<Mutation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarlo>,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    /// The SNR list, from `gammas` or `gamma_range` (not both).
    pub fn gamma_list(&self) -> Result<Option<Vec<f64>>> {
        match (&self.gammas, &self.gamma_range) {
            (Some(_), Some(_)) => bail!("give either gammas or gamma_range, not both"),
            (Some(g), None) => {
                if g.is_empty() {
                    bail!("gammas is empty");
                }
                if let Some(bad) = g.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
                    bail!("gamma = {bad} lies outside the domain (0, inf)");
                }
                Ok(Some(g.clone()))
            }
            (None, Some(r)) => r.values().map(Some),
            (None, None) => Ok(None),
        }
    }

    /// Checks that apply to every subcommand.
    pub fn validate_common(&self) -> Result<()> {
        let tol = self.tol();
        if !(tol > 0.0 && tol.is_finite()) {
            bail!("tol must be positive and finite, got {tol}");
        }
        if let Some(s) = self.slack {
            if !(s >= 0.0 && s.is_finite()) {
                bail!("slack must be nonnegative and finite, got {s}");
            }
        }
        if let Some(mc) = &self.monte_carlo {
            if mc.samples < 2 {
                bail!("monte_carlo.samples must be at least 2");
            }
        }
        self.gamma_list()?;
        Ok(())
    }
}

pub fn binary_prior(channel: BuiltinChannel, weights: [f64; 2]) -> PriorSpec {
    let atoms = if channel == BuiltinChannel::Gaussian { [-1.0, 1.0] } else { [1.0, 2.0] };
    PriorSpec::new(&atoms, &weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"chanel": "gaussian"}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
        let err = serde_json::from_str::<RunConfig>(r#"{"prior": {"atoms": [1], "weights": [1], "x": 0}}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn channel_aliases() {
        for name in ["negative-binomial", "nb", "negative_binomial"] {
            let c: RunConfig = serde_json::from_str(&format!(r#"{{"channel": "{name}"}}"#)).unwrap();
            assert_eq!(c.channel, Some(BuiltinChannel::NegativeBinomial));
        }
    }

    #[test]
    fn gamma_ranges() {
        let r = GammaRange {
            start: 1.0,
            stop: 100.0,
            count: 3,
            spacing: Spacing::Log,
        };
        let v = r.values().unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12 && (v[2] - 100.0).abs() < 1e-12);
        let c = RunConfig {
            gammas: Some(vec![1.0]),
            gamma_range: Some(r),
            ..Default::default()
        };
        assert!(c.gamma_list().is_err());
        let c = RunConfig {
            gammas: Some(vec![0.0]),
            ..Default::default()
        };
        assert!(c.validate_common().is_err());
    }

    #[test]
    fn suite_entries_parse() {
        let c: RunConfig = serde_json::from_str(
            r#"{"suite": [{"check": "immle", "channel": "gamma", "prior": {"atoms": [1, 2], "weights": [0.5, 0.5]},
                "gamma": 1, "mutation": {"kind": "scale_jumps", "factor": 1.01}}]}"#,
        )
        .unwrap();
        assert_eq!(c.suite.unwrap().len(), 1);
    }
}
