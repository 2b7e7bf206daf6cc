//! Ground truth: a cascade spreading one hop per step from a hidden source,
//! observed through the channel at every vertex of a finite window.
//!
//! The window is the ball of radius `k + t_max` around the prior center.
//! Every candidate neighborhood `N_u(t)` with `u` in the support and
//! `t ≤ t_max` lies inside it, so no signal the posterior needs is ever
//! missing.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{ChannelPair, Signal};
use crate::error::{Error, Result};
use crate::harness::{RuleDiagnostic, TrialRecord};
use crate::lattice::{
    ball_size, enumerate_ball, growth_inverse, l1_between, BallRegion, PriorSupport, Vertex,
};
use crate::posterior::{PosteriorState, SumPath};
use crate::stopping::StoppingRule;

/// Vertices infected at time `t`: the radius-`t` ball around the source.
pub fn infected_set(source: &Vertex, t: u64) -> Vec<Vertex> {
    enumerate_ball(source, t)
}

/// One time slice `y(t)` of the signal field, in window order.
#[derive(Debug, Clone)]
pub struct ObservationFrame {
    time: u64,
    window: Arc<BallRegion>,
    values: Vec<Signal>,
}

impl ObservationFrame {
    pub fn new(time: u64, window: Arc<BallRegion>, values: Vec<Signal>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::InvalidInput(format!(
                "frame has {} values for a window of {} vertices",
                values.len(),
                window.len()
            )));
        }
        Ok(ObservationFrame {
            time,
            window,
            values,
        })
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn window(&self) -> &Arc<BallRegion> {
        &self.window
    }

    pub fn values(&self) -> &[Signal] {
        &self.values
    }

    pub fn get(&self, v: &Vertex) -> Option<Signal> {
        self.window.index_of(v).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone)]
pub struct WorldState {
    source: Vertex,
    time: u64,
    window: Arc<BallRegion>,
}

impl WorldState {
    pub fn new(source: Vertex, window: Arc<BallRegion>) -> Result<Self> {
        Self::starting_at(source, window, 0)
    }

    /// A world whose next emitted frame is `y(time)`.
    pub fn starting_at(source: Vertex, window: Arc<BallRegion>, time: u64) -> Result<Self> {
        if source.dim() != window.dim() {
            return Err(Error::DimensionMismatch {
                left: source.dim(),
                right: window.dim(),
            });
        }
        if !window.contains(&source) {
            return Err(Error::InvalidInput(format!(
                "source {source} lies outside the window"
            )));
        }
        Ok(WorldState {
            source,
            time,
            window,
        })
    }

    pub fn source(&self) -> &Vertex {
        &self.source
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn window(&self) -> &Arc<BallRegion> {
        &self.window
    }

    pub fn is_infected(&self, v: &Vertex) -> bool {
        l1_between(v.coords(), self.source.coords()) <= self.time
    }

    /// Emits `y(time)` and advances the clock.
    pub fn next_frame<R: Rng + ?Sized>(
        &mut self,
        ch: &ChannelPair,
        rng: &mut R,
    ) -> ObservationFrame {
        let values = (0..self.window.len())
            .map(|i| {
                let infected = l1_between(self.window.coords(i), self.source.coords()) <= self.time;
                ch.sample(infected, rng)
            })
            .collect();
        let frame = ObservationFrame {
            time: self.time,
            window: Arc::clone(&self.window),
            values,
        };
        self.time += 1;
        frame
    }
}

/// Independent random streams of one trial. The world stream drives the
/// source and the signals; the rule stream drives lookahead rollouts, so two
/// rules run on the same trial id see identical observations.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    pub world: ChaCha8Rng,
    pub rule: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(master_seed: u64, trial_id: u64) -> Self {
        let mut world = ChaCha8Rng::seed_from_u64(master_seed);
        world.set_stream(2 * trial_id);
        let mut rule = ChaCha8Rng::seed_from_u64(master_seed);
        rule.set_stream(2 * trial_id + 1);
        TrialStreams { world, rule }
    }
}

/// Per-step hook for debugging exports.
pub trait TrialObserver {
    fn on_step(&mut self, frame: &ObservationFrame, posterior: &PosteriorState) -> Result<()>;
}

/// `4 · H(10 log n)`
pub fn default_t_max(d: usize, n: u64) -> u64 {
    4 * growth_inverse(d, 10.0 * (n as f64).ln())
}

/// A resolved, validated experiment: geometry, channel, rule and horizon.
#[derive(Debug, Clone)]
pub struct Experiment {
    support: Arc<PriorSupport>,
    window: Arc<BallRegion>,
    channel: ChannelPair,
    rule: StoppingRule,
    t_max: u64,
    path: SumPath,
}

impl Experiment {
    /// Uniform prior over the radius-`k` ball at the origin.
    pub fn new(
        dim: usize,
        prior_radius: u64,
        channel: ChannelPair,
        rule: StoppingRule,
        t_max: u64,
        path: SumPath,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if let Some(r) = rule.lookahead_horizon() {
            if r > t_max {
                return Err(Error::InvalidInput(format!(
                    "lookahead horizon {r} exceeds t_max {t_max}"
                )));
            }
        }
        let center = Vertex::origin(dim);
        Ok(Experiment {
            support: Arc::new(BallRegion::new(center.clone(), prior_radius)),
            window: Arc::new(BallRegion::new(center, prior_radius + t_max)),
            channel,
            rule,
            t_max,
            path,
        })
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn support(&self) -> &Arc<PriorSupport> {
        &self.support
    }

    pub fn window(&self) -> &Arc<BallRegion> {
        &self.window
    }

    pub fn channel(&self) -> &ChannelPair {
        &self.channel
    }

    pub fn rule(&self) -> &StoppingRule {
        &self.rule
    }

    pub fn t_max(&self) -> u64 {
        self.t_max
    }

    pub fn n(&self) -> u64 {
        self.support.len() as u64
    }

    pub fn with_rule(&self, rule: StoppingRule) -> Result<Self> {
        if let Some(r) = rule.lookahead_horizon() {
            if r > self.t_max {
                return Err(Error::InvalidInput(format!(
                    "lookahead horizon {r} exceeds t_max {}",
                    self.t_max
                )));
            }
        }
        Ok(Experiment {
            rule,
            ..self.clone()
        })
    }

    pub fn prior(&self) -> Result<PosteriorState> {
        PosteriorState::uniform(
            Arc::clone(&self.support),
            Arc::clone(&self.window),
            self.path,
        )
    }

    pub fn run_trial(
        &self,
        trial_id: u64,
        master_seed: u64,
        observer: Option<&mut dyn TrialObserver>,
    ) -> Result<TrialRecord> {
        let mut streams = TrialStreams::new(master_seed, trial_id);
        run_trajectory(self, trial_id, &mut streams, observer)
    }
}

/// Runs one trial: draw the source uniformly from the support, then loop
/// emit frame → update posterior → check rule until the rule fires or
/// `t_max` is reached.
pub fn run_trajectory(
    exp: &Experiment,
    trial_id: u64,
    streams: &mut TrialStreams,
    mut observer: Option<&mut dyn TrialObserver>,
) -> Result<TrialRecord> {
    let src_slot = streams.world.random_range(0..exp.support.len());
    let source = exp.support.vertex(src_slot);
    let mut world = WorldState::new(source.clone(), Arc::clone(&exp.window))?;
    let mut post = exp.prior()?;

    let mut variance_trajectory = Vec::new();
    let mut log_normalizer_trajectory = Vec::new();
    let mut diagnostics = Vec::new();
    let mut stopped = None;
    for s in 0..=exp.t_max {
        let frame = world.next_frame(&exp.channel, &mut streams.world);
        post.update(&frame, &exp.channel)?;
        variance_trajectory.push(post.variance());
        log_normalizer_trajectory.push(post.log_normalizer());
        if let Some(obs) = observer.as_deref_mut() {
            obs.on_step(&frame, &post)?;
        }
        let decision = exp.rule.check(&post, s, &exp.channel, &mut streams.rule)?;
        if let Some(est) = decision.estimate {
            diagnostics.push(RuleDiagnostic {
                time: s,
                value: est.value,
                std_error: est.std_error,
                rollouts: est.rollouts_used,
            });
        }
        if decision.stop {
            stopped = Some(s);
            break;
        }
    }

    let stop_time = stopped.unwrap_or(exp.t_max);
    let estimate = post.mean().to_vec();
    let squared_error: f64 = estimate
        .iter()
        .zip(source.coords())
        .map(|(&m, &x)| (m - x as f64).powi(2))
        .sum();
    let infection_cost = ball_size(exp.dim(), stop_time);
    Ok(TrialRecord {
        trial_id,
        source,
        stop_time,
        estimate,
        map_estimate: post.map_estimate(),
        squared_error,
        infection_cost,
        total_loss: squared_error + infection_cost as f64,
        variance_trajectory,
        log_normalizer_trajectory,
        truncated: stopped.is_none(),
        rule_diagnostics: diagnostics,
    })
}
