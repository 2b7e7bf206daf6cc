//! Stopping rules built on the information-gain-minus-cost functional
//!
//! ```text
//! f_s(T) = ‖v̂(T) − v̂(s)‖² − (|N(T)| − |N(s)|)
//! ```
//!
//! * `T_+` stops once the posterior variance drops to `|∂N(s)|`.
//! * `T_r` stops once a Monte-Carlo estimate of `E[f_s(r) | F_s]` is `≤ 0`.
//! * `FixedHorizon` stops at a given time and is used for profiling.
//!
//! `T_r ≤ T_opt ≤ T_+` for the Bayes-optimal stopping time `T_opt`, which is
//! not computed here.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade_sim::WorldState;
use crate::channels::ChannelPair;
use crate::error::{Error, Result};
use crate::lattice::{ball_size, growth_inverse, sphere_size};
use crate::posterior::PosteriorState;

/// Which per-rollout quantity estimates the expected information gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LookaheadEstimator {
    /// `‖v̂(r) − v̂(s)‖²`
    Direct,
    /// `Var(s) − Var(r)`; same expectation, lower noise.
    #[default]
    VarianceDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookaheadParams {
    pub horizon: u64,
    pub rollouts: usize,
    /// Trigger only if `value + guard_z · SE ≤ 0`.
    pub guard_z: f64,
    pub estimator: LookaheadEstimator,
}

impl LookaheadParams {
    pub fn new(horizon: u64, rollouts: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("lookahead horizon must be >= 1".into()));
        }
        if rollouts == 0 {
            return Err(Error::InvalidInput("rollouts must be >= 1".into()));
        }
        Ok(LookaheadParams {
            horizon,
            rollouts,
            guard_z: 0.0,
            estimator: LookaheadEstimator::default(),
        })
    }

    /// `r = max(1, H(c · log n))`
    pub fn default_horizon(d: usize, n: u64, coeff: f64) -> u64 {
        growth_inverse(d, coeff * (n as f64).ln()).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StoppingRule {
    TPlus,
    TR(LookaheadParams),
    FixedHorizon(u64),
}

/// Monte-Carlo estimate of `E[f_s(r) | F_s]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookaheadEstimate {
    pub value: f64,
    pub std_error: f64,
    pub rollouts_used: usize,
}

/// Information-gain terms of a single rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutGain {
    pub direct: f64,
    pub variance_difference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub stop: bool,
    pub estimate: Option<LookaheadEstimate>,
}

impl StoppingRule {
    pub fn lookahead_horizon(&self) -> Option<u64> {
        match self {
            StoppingRule::TR(p) => Some(p.horizon),
            _ => None,
        }
    }

    /// Evaluates the rule after frame `s` has been absorbed.
    pub fn check<R: Rng + ?Sized>(
        &self,
        state: &PosteriorState,
        s: u64,
        ch: &ChannelPair,
        rng: &mut R,
    ) -> Result<Decision> {
        match self {
            StoppingRule::TPlus => Ok(Decision {
                stop: t_plus_triggered(state, s),
                estimate: None,
            }),
            StoppingRule::FixedHorizon(h) => Ok(Decision {
                stop: s >= *h,
                estimate: None,
            }),
            StoppingRule::TR(params) => t_r_triggered(state, s, params, ch, rng),
        }
    }
}

/// `Var(s) ≤ |∂N(s)|`
pub fn t_plus_triggered(state: &PosteriorState, s: u64) -> bool {
    state.variance() <= sphere_size(state.dim(), s) as f64
}

/// Runs `rollouts` hypothetical continuations from `F_s` to time `r`, each
/// with a source drawn from the current posterior. The caller's state is
/// never modified. Rollout `i` uses its own stream derived from one draw of
/// `rng`, so the result does not depend on how rollouts are scheduled.
pub fn lookahead_rollouts<R: Rng + ?Sized>(
    state: &PosteriorState,
    s: u64,
    r: u64,
    rollouts: usize,
    ch: &ChannelPair,
    rng: &mut R,
) -> Result<Vec<RolloutGain>> {
    if state.time() != s as i64 {
        return Err(Error::InvalidInput(format!(
            "posterior is at time {}, lookahead asked from {s}",
            state.time()
        )));
    }
    if r < s {
        return Err(Error::InvalidInput(format!(
            "lookahead horizon {r} precedes current time {s}"
        )));
    }
    let base: u64 = rng.random();
    let window = state.window();
    let mean_s = state.mean();
    let var_s = state.variance();
    (0..rollouts)
        .into_par_iter()
        .map(|i| {
            if r == s {
                return Ok(RolloutGain {
                    direct: 0.0,
                    variance_difference: 0.0,
                });
            }
            let mut sub = ChaCha8Rng::seed_from_u64(base);
            sub.set_stream(i as u64);
            let source = state.support().vertex(state.sample_index(&mut sub));
            let mut world = WorldState::starting_at(source, Arc::clone(window), s + 1)?;
            let mut sim = state.clone();
            for _ in s + 1..=r {
                let frame = world.next_frame(ch, &mut sub);
                sim.update(&frame, ch)?;
            }
            let direct = sim
                .mean()
                .iter()
                .zip(mean_s)
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            Ok(RolloutGain {
                direct,
                variance_difference: var_s - sim.variance(),
            })
        })
        .collect()
}

pub fn lookahead_estimate<R: Rng + ?Sized>(
    state: &PosteriorState,
    s: u64,
    r: u64,
    rollouts: usize,
    estimator: LookaheadEstimator,
    ch: &ChannelPair,
    rng: &mut R,
) -> Result<LookaheadEstimate> {
    if rollouts == 0 {
        return Err(Error::InvalidInput("rollouts must be >= 1".into()));
    }
    let gains = lookahead_rollouts(state, s, r, rollouts, ch, rng)?;
    let xs: Vec<f64> = gains
        .iter()
        .map(|g| match estimator {
            LookaheadEstimator::Direct => g.direct,
            LookaheadEstimator::VarianceDifference => g.variance_difference,
        })
        .collect();
    let (mean, se) = mean_and_se(&xs);
    let d = state.dim();
    let cost = (ball_size(d, r) - ball_size(d, s)) as f64;
    Ok(LookaheadEstimate {
        value: mean - cost,
        std_error: se,
        rollouts_used: rollouts,
    })
}

/// `s ≥ r` fires unconditionally since `f_r(r) = 0`.
pub fn t_r_triggered<R: Rng + ?Sized>(
    state: &PosteriorState,
    s: u64,
    params: &LookaheadParams,
    ch: &ChannelPair,
    rng: &mut R,
) -> Result<Decision> {
    if s >= params.horizon {
        return Ok(Decision {
            stop: true,
            estimate: None,
        });
    }
    let est = lookahead_estimate(
        state,
        s,
        params.horizon,
        params.rollouts,
        params.estimator,
        ch,
        rng,
    )?;
    Ok(Decision {
        stop: est.value + params.guard_z * est.std_error <= 0.0,
        estimate: Some(est),
    })
}

pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
