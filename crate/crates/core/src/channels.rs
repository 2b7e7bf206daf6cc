//! Per-vertex signal model: the pre-infection law `Q0` and the
//! post-infection law `Q1`.
//!
//! Two families are provided. `GaussianShift` draws `N(0, 1)` before
//! infection and `N(μ, 1)` after. `Discrete` draws symbols from finite
//! probability vectors `q0` and `q1`. All likelihood arithmetic is done in
//! log space.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single observed signal `y_u(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Signal {
    Real(f64),
    Symbol(u32),
}

impl std::fmt::Display for Signal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Signal::Real(x) => write!(f, "{x}"),
            Signal::Symbol(s) => write!(f, "{s}"),
        }
    }
}

/// Serializable description of a channel, as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Gaussian { mu: f64 },
    Discrete { q0: Vec<f64>, q1: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
enum Family {
    Gaussian {
        mu: f64,
    },
    Discrete {
        q0: Vec<f64>,
        q1: Vec<f64>,
        cdf0: Vec<f64>,
        cdf1: Vec<f64>,
        // None for symbols with zero mass under both laws.
        log_ratio: Vec<Option<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    family: Family,
    identical: bool,
}

/// Moment constants of the likelihood ratio `L = dQ1/dQ0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelMoments {
    /// `E_{Q1}[L]`
    pub alpha: f64,
    /// `E_{Q0}[L²]`
    pub lambda0: f64,
    /// `E_{Q1}[L²]`
    pub lambda1: f64,
    /// `D(Q0 ‖ Q1)`
    pub kl01: f64,
    /// `D(Q1 ‖ Q0)`
    pub kl10: f64,
    /// `(kl01 + kl10) / 2`
    pub d_mean: f64,
}

impl ChannelMoments {
    /// `λ = λ0 · λ1`
    pub fn lambda(&self) -> f64 {
        self.lambda0 * self.lambda1
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha == 1.0
            && self.lambda0 == 1.0
            && self.lambda1 == 1.0
            && self.kl01 == 0.0
            && self.kl10 == 0.0
    }
}

const PROB_SUM_TOL: f64 = 1e-9;

impl ChannelPair {
    /// Unit-variance Gaussian mean shift with `μ > 0`.
    pub fn gaussian(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gaussian mean shift must be finite and positive, got {mu}"
            )));
        }
        Ok(ChannelPair {
            family: Family::Gaussian { mu },
            identical: false,
        })
    }

    /// Finite-alphabet channel. Rejects `q0 == q1`.
    pub fn discrete(q0: Vec<f64>, q1: Vec<f64>) -> Result<Self> {
        let ch = Self::discrete_any(q0, q1)?;
        if ch.identical {
            return Err(Error::InvalidInput(
                "q0 and q1 are identical; enable test mode to allow this".into(),
            ));
        }
        Ok(ch)
    }

    /// `Q0 = Q1 = N(0, 1)`; carries no information. Test mode only.
    pub fn uninformative() -> Self {
        ChannelPair {
            family: Family::Gaussian { mu: 0.0 },
            identical: true,
        }
    }

    /// Builds a channel from its config description. `test_mode` permits
    /// identical measures.
    pub fn from_spec(spec: &ChannelSpec, test_mode: bool) -> Result<Self> {
        match spec {
            ChannelSpec::Gaussian { mu } if test_mode && *mu == 0.0 => Ok(Self::uninformative()),
            ChannelSpec::Gaussian { mu } => Self::gaussian(*mu),
            ChannelSpec::Discrete { q0, q1 } if test_mode => {
                Self::discrete_any(q0.clone(), q1.clone())
            }
            ChannelSpec::Discrete { q0, q1 } => Self::discrete(q0.clone(), q1.clone()),
        }
    }

    fn discrete_any(q0: Vec<f64>, q1: Vec<f64>) -> Result<Self> {
        if q0.len() != q1.len() {
            return Err(Error::DimensionMismatch {
                left: q0.len(),
                right: q1.len(),
            });
        }
        if q0.is_empty() {
            return Err(Error::InvalidInput("empty alphabet".into()));
        }
        for (name, q) in [("q0", &q0), ("q1", &q1)] {
            if q.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidInput(format!(
                    "{name} has an entry outside [0, 1]"
                )));
            }
            let s: f64 = q.iter().sum();
            if (s - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::InvalidInput(format!("{name} sums to {s}, not 1")));
            }
        }
        let mut log_ratio = Vec::with_capacity(q0.len());
        for (i, (&a, &b)) in q0.iter().zip(&q1).enumerate() {
            match (a > 0.0, b > 0.0) {
                (true, true) => log_ratio.push(Some(b.ln() - a.ln())),
                (false, false) => log_ratio.push(None),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "symbol {i} has zero mass under one law only; q0 and q1 must be mutually absolutely continuous"
                    )))
                }
            }
        }
        let cdf = |q: &[f64]| {
            let mut acc = 0.0;
            q.iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect::<Vec<_>>()
        };
        let identical = q0 == q1;
        Ok(ChannelPair {
            family: Family::Discrete {
                cdf0: cdf(&q0),
                cdf1: cdf(&q1),
                q0,
                q1,
                log_ratio,
            },
            identical,
        })
    }

    /// True when `Q0 = Q1`.
    pub fn is_identical(&self) -> bool {
        self.identical
    }

    pub fn spec(&self) -> ChannelSpec {
        match &self.family {
            Family::Gaussian { mu } => ChannelSpec::Gaussian { mu: *mu },
            Family::Discrete { q0, q1, .. } => ChannelSpec::Discrete {
                q0: q0.clone(),
                q1: q1.clone(),
            },
        }
    }

    /// Draws from `Q1` if `infected`, else from `Q0`.
    pub fn sample<R: Rng + ?Sized>(&self, infected: bool, rng: &mut R) -> Signal {
        match &self.family {
            Family::Gaussian { mu } => {
                let z: f64 = rng.sample(StandardNormal);
                Signal::Real(if infected { z + mu } else { z })
            }
            Family::Discrete {
                q0, q1, cdf0, cdf1, ..
            } => {
                let (q, cdf) = if infected { (q1, cdf1) } else { (q0, cdf0) };
                let u: f64 = rng.random();
                // Rounding can leave the final cdf just below 1.
                let idx = cdf
                    .iter()
                    .position(|&c| u < c)
                    .or_else(|| q.iter().rposition(|&p| p > 0.0))
                    .expect("probability vector has positive mass");
                Signal::Symbol(idx as u32)
            }
        }
    }

    /// `log (dQ1/dQ0)(y)`.
    pub fn llr(&self, y: Signal) -> Result<f64> {
        match (&self.family, y) {
            (Family::Gaussian { mu }, Signal::Real(x)) => Ok(mu * x - 0.5 * mu * mu),
            (Family::Discrete { log_ratio, .. }, Signal::Symbol(s)) => log_ratio
                .get(s as usize)
                .copied()
                .flatten()
                .ok_or(Error::SymbolOutOfRange {
                    symbol: s,
                    size: log_ratio.len(),
                }),
            _ => Err(Error::SignalKind),
        }
    }

    pub fn moments(&self) -> ChannelMoments {
        if self.identical {
            return ChannelMoments {
                alpha: 1.0,
                lambda0: 1.0,
                lambda1: 1.0,
                kl01: 0.0,
                kl10: 0.0,
                d_mean: 0.0,
            };
        }
        match &self.family {
            Family::Gaussian { mu } => {
                let m2 = mu * mu;
                ChannelMoments {
                    alpha: m2.exp(),
                    lambda0: m2.exp(),
                    lambda1: (3.0 * m2).exp(),
                    kl01: m2 / 2.0,
                    kl10: m2 / 2.0,
                    d_mean: m2 / 2.0,
                }
            }
            Family::Discrete { q0, q1, .. } => {
                let mut m = ChannelMoments {
                    alpha: 0.0,
                    lambda0: 0.0,
                    lambda1: 0.0,
                    kl01: 0.0,
                    kl10: 0.0,
                    d_mean: 0.0,
                };
                for (&a, &b) in q0.iter().zip(q1) {
                    if a == 0.0 {
                        continue;
                    }
                    let ratio = b / a;
                    m.alpha += b * ratio;
                    m.lambda0 += a * ratio * ratio;
                    m.lambda1 += b * ratio * ratio;
                    m.kl01 += a * (a / b).ln();
                    m.kl10 += b * ratio.ln();
                }
                m.d_mean = 0.5 * (m.kl01 + m.kl10);
                m
            }
        }
    }
}
