//! JSON experiment configuration.
//!
//! Every field has a default, so `{}` is a valid configuration:
//!
//! ```json
//! {
//!   "q": 32,
//!   "q_list": [16, 32, 64],
//!   "ratio": 6.283185307179586,
//!   "phantom": { "kind": "decaying", "v": 5.0, "amplitude": 1.0, "max_degree": 20, "seed": 0 },
//!   "law": { "kind": "gaussian", "sigma": 0.5 },
//!   "t": "auto",
//!   "v": 5.0,
//!   "scale": 1.0,
//!   "filter": "hard",
//!   "replications": 50,
//!   "base_seed": 0,
//!   "t_grid": { "kind": "quantiles", "points": 41, "lo": 0.005, "hi": 0.995 },
//!   "covariance_t_grid": { "kind": "quantiles", "points": 5, "lo": 0.1, "hi": 0.9 },
//!   "eval_grid": { "radial": 50, "angular": 50, "r_max": 0.99 },
//!   "degree_cap": 50,
//!   "output_dir": null
//! }
//! ```
//!
//! `t` is `"auto"` (rate rule with `v`, `scale`), a positive integer, or
//! `"oracle"` (per replication, the `t` in `[1, degree_cap]` with the smallest
//! true sup error; simulation only).

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use radon_spectral::basis::DEFAULT_DEGREE_CAP;
use radon_spectral::estimator::default_bandwidth;
use radon_spectral::{BandwidthRule, BrainPoint, FilterSpec, ZernikeBasis};
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::law::{quantile_grid, Law, LawSpec};
use crate::phantom::PhantomSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Auto,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthChoice {
    Fixed(u32),
    Keyword(Keyword),
}

impl Default for BandwidthChoice {
    fn default() -> Self {
        Self::Keyword(Keyword::Auto)
    }
}

/// Bandwidth after resolving `"auto"` for a given sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bandwidth {
    Fixed(u32),
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterChoice {
    #[default]
    Hard,
    Taper,
}

impl FilterChoice {
    pub fn spec(self) -> FilterSpec {
        match self {
            Self::Hard => FilterSpec::HardCutoff,
            Self::Taper => FilterSpec::LinearTaper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TGridSpec {
    /// Equispaced between two quantiles of the error law.
    Quantiles {
        points: usize,
        lo: f64,
        hi: f64,
    },
    Explicit {
        values: Vec<f64>,
    },
}

impl TGridSpec {
    pub fn resolve(&self, law: &Law) -> SimResult<Vec<f64>> {
        match self {
            Self::Quantiles { points, lo, hi } => quantile_grid(law, *points, *lo, *hi),
            Self::Explicit { values } => {
                if values.is_empty() || values.iter().any(|t| !t.is_finite()) {
                    return Err(SimError::Config(
                        "explicit t-grid must be finite and non-empty".into(),
                    ));
                }
                if values.windows(2).any(|w| w[0] > w[1]) {
                    return Err(SimError::Config("explicit t-grid must be sorted".into()));
                }
                Ok(values.clone())
            }
        }
    }
}

/// Polar evaluation grid for sup norms: `r` uniform on `[0, r_max]`,
/// `theta` uniform on `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalGridSpec {
    pub radial: usize,
    pub angular: usize,
    pub r_max: f64,
}

impl Default for EvalGridSpec {
    fn default() -> Self {
        Self {
            radial: 50,
            angular: 50,
            r_max: 0.99,
        }
    }
}

impl EvalGridSpec {
    pub fn points(&self) -> SimResult<Vec<BrainPoint>> {
        if self.radial < 2 || self.angular < 1 || !(0.0..=1.0).contains(&self.r_max) {
            return Err(SimError::Config(
                "eval grid needs radial >= 2, angular >= 1 and r_max in [0,1]".into(),
            ));
        }
        let mut out = Vec::with_capacity(self.radial * self.angular);
        for i in 0..self.radial {
            let r = self.r_max * i as f64 / (self.radial - 1) as f64;
            for j in 0..self.angular {
                out.push(BrainPoint::new(r, TAU * j as f64 / self.angular as f64)?);
            }
        }
        Ok(out)
    }
}

fn default_q() -> usize {
    32
}
fn default_q_list() -> Vec<usize> {
    vec![16, 32, 64]
}
fn default_ratio() -> f64 {
    TAU
}
fn default_law() -> LawSpec {
    LawSpec::Gaussian { sigma: 0.5 }
}
fn default_v() -> f64 {
    5.0
}
fn default_scale() -> f64 {
    1.0
}
fn default_replications() -> usize {
    50
}
fn default_t_grid() -> TGridSpec {
    TGridSpec::Quantiles {
        points: 41,
        lo: 0.005,
        hi: 0.995,
    }
}
fn default_covariance_t_grid() -> TGridSpec {
    TGridSpec::Quantiles {
        points: 5,
        lo: 0.1,
        hi: 0.9,
    }
}
fn default_cap() -> u32 {
    DEFAULT_DEGREE_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Radial column count for single-grid commands.
    #[serde(default = "default_q")]
    pub q: usize,
    /// Radial column counts swept by the rate and linearization studies.
    #[serde(default = "default_q_list")]
    pub q_list: Vec<usize>,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default)]
    pub phantom: PhantomSpec,
    #[serde(default = "default_law")]
    pub law: LawSpec,
    #[serde(default)]
    pub t: BandwidthChoice,
    #[serde(default = "default_v")]
    pub v: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub filter: FilterChoice,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_t_grid")]
    pub t_grid: TGridSpec,
    #[serde(default = "default_covariance_t_grid")]
    pub covariance_t_grid: TGridSpec,
    #[serde(default)]
    pub eval_grid: EvalGridSpec,
    #[serde(default = "default_cap")]
    pub degree_cap: u32,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> SimResult<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> SimResult<()> {
        if self.replications == 0 {
            return Err(SimError::Config("replications must be >= 1".into()));
        }
        if self.q == 0 || self.q_list.is_empty() || self.q_list.contains(&0) {
            return Err(SimError::Config(
                "q and every q_list entry must be >= 1".into(),
            ));
        }
        if !(self.ratio.is_finite() && self.ratio > 0.0) {
            return Err(SimError::Config(format!(
                "ratio must be positive, got {}",
                self.ratio
            )));
        }
        if let BandwidthChoice::Fixed(t) = self.t {
            if t == 0 || t > self.degree_cap {
                return Err(SimError::Config(format!(
                    "fixed t must be in [1, {}], got {t}",
                    self.degree_cap
                )));
            }
        }
        if self.t == BandwidthChoice::Keyword(Keyword::Auto) {
            self.rule()?;
        }
        self.law.build()?;
        let phantom = self.phantom.build()?;
        if phantom.max_degree() > self.degree_cap {
            return Err(SimError::Config(format!(
                "phantom degree {} exceeds degree_cap {}",
                phantom.max_degree(),
                self.degree_cap
            )));
        }
        self.eval_grid.points()?;
        Ok(())
    }

    pub fn basis(&self) -> SimResult<ZernikeBasis> {
        Ok(ZernikeBasis::new(
            self.degree_cap,
            radon_spectral::basis::DEFAULT_MAX_ORDER,
        )?)
    }

    pub fn rule(&self) -> SimResult<BandwidthRule> {
        Ok(BandwidthRule::new(self.v, self.scale)?)
    }

    pub fn filter_spec(&self) -> FilterSpec {
        self.filter.spec()
    }

    /// Bandwidth for `n` observations.
    pub fn bandwidth(&self, n: usize) -> SimResult<Bandwidth> {
        Ok(match self.t {
            BandwidthChoice::Fixed(t) => Bandwidth::Fixed(t),
            BandwidthChoice::Keyword(Keyword::Oracle) => Bandwidth::Oracle,
            BandwidthChoice::Keyword(Keyword::Auto) => {
                Bandwidth::Fixed(default_bandwidth(n, &self.rule()?, self.degree_cap)?)
            }
        })
    }

    /// Output location: explicit path, else `output_dir` of the config, else
    /// `env_dir`, else the working directory.
    pub fn output_path(
        &self,
        explicit: Option<&Path>,
        env_dir: Option<&Path>,
        name: &str,
    ) -> PathBuf {
        if let Some(p) = explicit {
            return p.to_path_buf();
        }
        let dir = self
            .output_dir
            .as_deref()
            .or(env_dir)
            .unwrap_or(Path::new("."));
        dir.join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.q_list, [16, 32, 64]);
        assert_eq!(cfg.t, BandwidthChoice::Keyword(Keyword::Auto));
        assert_eq!(cfg.bandwidth(6432).unwrap(), Bandwidth::Fixed(1));
    }

    #[test]
    fn bandwidth_forms_parse() {
        let fixed = ExperimentConfig::from_json(r#"{"t": 3}"#).unwrap();
        assert_eq!(fixed.bandwidth(100).unwrap(), Bandwidth::Fixed(3));
        let oracle = ExperimentConfig::from_json(r#"{"t": "oracle"}"#).unwrap();
        assert_eq!(oracle.bandwidth(100).unwrap(), Bandwidth::Oracle);
        assert!(ExperimentConfig::from_json(r#"{"t": "best"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"t": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"t": 51}"#).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for text in [
            r#"{"replications": 0}"#,
            r#"{"q_list": []}"#,
            r#"{"q": 0}"#,
            r#"{"v": 4.0}"#,
            r#"{"ratio": -1.0}"#,
            r#"{"law": {"kind": "student_t", "df": 2.5, "scale": 1.0}}"#,
            r#"{"degree_cap": 10}"#,
            r#"{"unknown_field": 1}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn config_round_trips() {
        let cfg = ExperimentConfig {
            t: BandwidthChoice::Fixed(4),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn eval_grid_shape() {
        let pts = EvalGridSpec::default().points().unwrap();
        assert_eq!(pts.len(), 2500);
        assert_eq!(pts[0].r, 0.0);
        assert!((pts[2499].r - 0.99).abs() < 1e-15);
    }

    #[test]
    fn output_path_precedence() {
        let mut cfg = ExperimentConfig::default();
        let env = Path::new("/env");
        assert_eq!(
            cfg.output_path(None, Some(env), "a.csv"),
            Path::new("/env/a.csv")
        );
        cfg.output_dir = Some("/cfg".into());
        assert_eq!(
            cfg.output_path(None, Some(env), "a.csv"),
            Path::new("/cfg/a.csv")
        );
        assert_eq!(
            cfg.output_path(Some(Path::new("x.csv")), Some(env), "a.csv"),
            Path::new("x.csv")
        );
    }
}
