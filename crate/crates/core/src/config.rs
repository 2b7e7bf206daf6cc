//! Experiment configuration, read from TOML.
//!
//! ```toml
//! dimension = 1
//! prior_radius = 20
//! trials = 50
//! master_seed = 42
//!
//! [channel]
//! kind = "gaussian"
//! mu = 2.0
//!
//! [rule]
//! kind = "t_plus"
//! ```
//!
//! Every numeric field is range-checked by [`ExperimentConfig::validate`]
//! before any computation; failures name the offending field path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade_sim::{default_t_max, Experiment};
use crate::channels::{ChannelPair, ChannelSpec};
use crate::error::{Error, Result};
use crate::lattice::{ball_size, growth_inverse};
use crate::posterior::SumPath;
use crate::stopping::{LookaheadEstimator, LookaheadParams, StoppingRule};

pub const MAX_DIMENSION: usize = 4;
/// Upper bound on window vertices, to keep frames in memory.
pub const MAX_WINDOW: u64 = 20_000_000;
pub const MAX_TRIALS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    #[default]
    TPlus,
    TR,
    FixedHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuleSpec {
    pub kind: RuleKind,
    /// `r = H(r_coeff · log n)` unless `r` is given.
    pub r_coeff: f64,
    pub r: Option<u64>,
    pub rollouts: usize,
    pub guard_z: f64,
    pub estimator: LookaheadEstimator,
    pub horizon: u64,
}

impl Default for RuleSpec {
    fn default() -> Self {
        RuleSpec {
            kind: RuleKind::TPlus,
            r_coeff: 6.0,
            r: None,
            rollouts: 200,
            guard_z: 0.0,
            estimator: LookaheadEstimator::VarianceDifference,
            horizon: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub results: String,
    pub summary: String,
    pub scaling: String,
    pub profile: String,
    pub z_check: String,
    /// One CSV of raw signals per trial.
    pub frame_dump: bool,
    /// One CSV of `π_u` per step per trial.
    pub posterior_snapshots: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            results: "results.jsonl".into(),
            summary: "summary.csv".into(),
            scaling: "scaling.csv".into(),
            profile: "variance_profile.csv".into(),
            z_check: "z_check.csv".into(),
            frame_dump: false,
            posterior_snapshots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub k_grid: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub horizon: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZCheckSpec {
    pub eps: f64,
    /// Last time checked; defaults to `H(0.1 · log n)`.
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub prior_radius: u64,
    pub channel: ChannelSpec,
    #[serde(default)]
    pub rule: RuleSpec,
    /// Defaults to `4 · H(10 log n)`.
    #[serde(default)]
    pub t_max: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; 0 uses all available cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub accelerated: bool,
    /// Permits `Q0 = Q1`.
    #[serde(default)]
    pub test_mode: bool,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub scaling: Option<ScalingSpec>,
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default)]
    pub z_check: Option<ZCheckSpec>,
}

fn default_trials() -> u64 {
    100
}

impl ExperimentConfig {
    /// A config with every optional section at its default.
    pub fn new(dimension: usize, prior_radius: u64, channel: ChannelSpec) -> Self {
        ExperimentConfig {
            dimension,
            prior_radius,
            channel,
            rule: RuleSpec::default(),
            t_max: None,
            trials: default_trials(),
            master_seed: 0,
            threads: 0,
            accelerated: false,
            test_mode: false,
            output: OutputSpec::default(),
            scaling: None,
            profile: None,
            z_check: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// First 16 hex digits of SHA-256 over the TOML rendering, with `threads`
    /// and `output` reset since neither affects results.
    pub fn config_hash(&self) -> String {
        let canonical = ExperimentConfig {
            threads: 0,
            output: OutputSpec::default(),
            ..self.clone()
        };
        let digest = Sha256::digest(canonical.to_toml_string().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn n(&self) -> u64 {
        ball_size(self.dimension, self.prior_radius)
    }

    pub fn effective_t_max(&self) -> u64 {
        self.t_max
            .unwrap_or_else(|| default_t_max(self.dimension, self.n()))
    }

    pub fn sum_path(&self) -> SumPath {
        if self.accelerated {
            SumPath::Accelerated
        } else {
            SumPath::Direct
        }
    }

    pub fn channel_pair(&self) -> Result<ChannelPair> {
        ChannelPair::from_spec(&self.channel, self.test_mode).map_err(|e| field_error("channel", e))
    }

    pub fn stopping_rule(&self) -> Result<StoppingRule> {
        let rule = &self.rule;
        Ok(match rule.kind {
            RuleKind::TPlus => StoppingRule::TPlus,
            RuleKind::FixedHorizon => StoppingRule::FixedHorizon(rule.horizon),
            RuleKind::TR => {
                let r = rule.r.unwrap_or_else(|| {
                    LookaheadParams::default_horizon(self.dimension, self.n(), rule.r_coeff)
                });
                let mut params =
                    LookaheadParams::new(r, rule.rollouts).map_err(|e| field_error("rule", e))?;
                params.guard_z = rule.guard_z;
                params.estimator = rule.estimator;
                StoppingRule::TR(params)
            }
        })
    }

    /// The same config with `t_max` and the lookahead horizon made explicit.
    pub fn effective(&self) -> Result<Self> {
        let mut out = self.clone();
        out.t_max = Some(self.effective_t_max());
        if let StoppingRule::TR(p) = self.stopping_rule()? {
            out.rule.r = Some(p.horizon);
        }
        Ok(out)
    }

    pub fn with_prior_radius(&self, k: u64) -> Self {
        ExperimentConfig {
            prior_radius: k,
            ..self.clone()
        }
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.validate()?;
        Experiment::new(
            self.dimension,
            self.prior_radius,
            self.channel_pair()?,
            self.stopping_rule()?,
            self.effective_t_max(),
            self.sum_path(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DIMENSION).contains(&self.dimension) {
            return Err(Error::config(
                "dimension",
                format!("must be in 1..={MAX_DIMENSION}, got {}", self.dimension),
            ));
        }
        if self.trials > MAX_TRIALS {
            return Err(Error::config(
                "trials",
                format!("must be at most {MAX_TRIALS}, got {}", self.trials),
            ));
        }
        if self.master_seed > i64::MAX as u64 {
            return Err(Error::config(
                "master_seed",
                "must fit in a signed 64-bit integer",
            ));
        }
        match &self.channel {
            ChannelSpec::Gaussian { mu } if !mu.is_finite() => {
                return Err(Error::config("channel.mu", "must be finite"));
            }
            ChannelSpec::Gaussian { mu } if *mu < 0.0 || (*mu == 0.0 && !self.test_mode) => {
                return Err(Error::config(
                    "channel.mu",
                    format!("must be positive (0 allowed only with test_mode), got {mu}"),
                ));
            }
            _ => {}
        }
        self.channel_pair()?;

        let rule = &self.rule;
        if !(rule.r_coeff.is_finite() && rule.r_coeff > 0.0) {
            return Err(Error::config("rule.r_coeff", "must be finite and positive"));
        }
        if rule.rollouts == 0 {
            return Err(Error::config("rule.rollouts", "must be at least 1"));
        }
        if rule.r == Some(0) {
            return Err(Error::config("rule.r", "must be at least 1"));
        }
        if !(rule.guard_z.is_finite() && rule.guard_z >= 0.0) {
            return Err(Error::config(
                "rule.guard_z",
                "must be finite and nonnegative",
            ));
        }

        if let Some(spec) = &self.scaling {
            if spec.k_grid.is_empty() {
                return Err(Error::config("scaling.k_grid", "must not be empty"));
            }
            if spec.k_grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config(
                    "scaling.k_grid",
                    "must be strictly increasing",
                ));
            }
            for &k in &spec.k_grid {
                self.with_prior_radius(k)
                    .validate_geometry("scaling.k_grid")?;
            }
        }
        if let Some(z) = &self.z_check {
            let floor = 1.0 / (self.n() as f64).sqrt();
            if !(z.eps.is_finite() && z.eps >= floor) {
                return Err(Error::config(
                    "z_check.eps",
                    format!("must be at least 1/sqrt(n) = {floor}, got {}", z.eps),
                ));
            }
        }
        self.validate_geometry("prior_radius")
    }

    fn validate_geometry(&self, field: &str) -> Result<()> {
        let t_max = self.effective_t_max();
        let window_radius = self
            .prior_radius
            .checked_add(t_max)
            .ok_or_else(|| Error::config("t_max", "overflows the window radius"))?;
        // Bounding-box index of the window is (2R+1)^d.
        let box_len = (2 * window_radius as u128 + 1).pow(self.dimension as u32);
        if box_len > MAX_WINDOW as u128 * 4 || ball_size(self.dimension, window_radius) > MAX_WINDOW
        {
            return Err(Error::config(
                field,
                format!(
                    "window radius {} (prior_radius + t_max) is too large for dimension {}",
                    window_radius, self.dimension
                ),
            ));
        }
        if let StoppingRule::TR(p) = self.stopping_rule()? {
            if p.horizon > t_max {
                return Err(Error::config(
                    "rule.r",
                    format!("lookahead horizon {} exceeds t_max {t_max}", p.horizon),
                ));
            }
        }
        if let Some(p) = &self.profile {
            if p.horizon > t_max {
                return Err(Error::config(
                    "profile.horizon",
                    format!("exceeds t_max {t_max}"),
                ));
            }
        }
        Ok(())
    }

    /// Last time inspected by the normalizer check.
    pub fn z_check_horizon(&self) -> u64 {
        self.z_check
            .as_ref()
            .and_then(|z| z.horizon)
            .unwrap_or_else(|| growth_inverse(self.dimension, 0.1 * (self.n() as f64).ln()))
    }
}

fn field_error(field: &str, e: Error) -> Error {
    match e {
        Error::InvalidInput(reason) => Error::config(field, reason),
        other => Error::config(field, other.to_string()),
    }
}
