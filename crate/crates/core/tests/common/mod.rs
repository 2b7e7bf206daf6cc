//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cascade_core::lattice::BallRegion;
use cascade_core::{
    ChannelPair, Experiment, ObservationFrame, PosteriorState, StoppingRule, SumPath,
    TrialObserver, WorldState,
};

/// `|∂N(t)|` for `t = 0..=max_t` by breadth-first search over unit steps.
pub fn bfs_spheres(d: usize, max_t: u64) -> Vec<u64> {
    let origin = vec![0i64; d];
    let mut seen = HashSet::from([origin.clone()]);
    let mut queue = VecDeque::from([(origin, 0u64)]);
    let mut counts = vec![0u64; max_t as usize + 1];
    while let Some((v, t)) = queue.pop_front() {
        counts[t as usize] += 1;
        if t == max_t {
            continue;
        }
        for i in 0..d {
            for step in [-1, 1] {
                let mut w = v.clone();
                w[i] += step;
                if seen.insert(w.clone()) {
                    queue.push_back((w, t + 1));
                }
            }
        }
    }
    counts
}

/// All points of the cube `[-r, r]^d` with L1 norm at most `r`, by brute force.
pub fn brute_ball(d: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-r..=r).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out.retain(|p| p.iter().map(|x| x.abs()).sum::<i64>() <= r);
    out
}

fn l1(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `log X_u(t) = Σ_{s ≤ t} Σ_{w : d(u,w) ≤ s} llr(y_w(s))`, recomputed from
/// scratch over every window vertex.
pub fn batch_log_weights(
    support: &BallRegion,
    window: &Arc<BallRegion>,
    frames: &[ObservationFrame],
    ch: &ChannelPair,
) -> Vec<f64> {
    (0..support.len())
        .map(|i| {
            let u = support.coords(i);
            let mut total = 0.0;
            for (s, frame) in frames.iter().enumerate() {
                for (j, &y) in frame.values().iter().enumerate() {
                    if l1(u, window.coords(j)) <= s as i64 {
                        total += ch.llr(y).unwrap();
                    }
                }
            }
            total
        })
        .collect()
}

/// Normal density with unit variance.
pub fn normal_pdf(x: f64, mean: f64) -> f64 {
    (-(x - mean).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Gaussian channel moments by quadrature:
/// `(α, λ0, λ1, D(Q0‖Q1), D(Q1‖Q0))`.
pub fn gaussian_moments_by_quadrature(mu: f64) -> (f64, f64, f64, f64, f64) {
    let (a, b, n) = (-40.0, 40.0 + 4.0 * mu, 400_000);
    let q0 = |y: f64| normal_pdf(y, 0.0);
    let q1 = |y: f64| normal_pdf(y, mu);
    let ratio = |y: f64| (mu * y - mu * mu / 2.0).exp();
    let alpha = simpson(|y| q1(y) * ratio(y), a, b, n);
    let lambda0 = simpson(|y| q0(y) * ratio(y).powi(2), a, b, n);
    let lambda1 = simpson(|y| q1(y) * ratio(y).powi(2), a, b, n);
    let kl01 = simpson(|y| q0(y) * (q0(y) / q1(y)).ln(), -30.0, 30.0, n);
    let kl10 = simpson(|y| q1(y) * (q1(y) / q0(y)).ln(), -30.0, 30.0, n);
    (alpha, lambda0, lambda1, kl01, kl10)
}

/// Discrete moments by summation over symbols with positive mass.
pub fn discrete_moments_by_sum(q0: &[f64], q1: &[f64]) -> (f64, f64, f64, f64, f64) {
    let mut m = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&p0, &p1) in q0.iter().zip(q1) {
        if p0 == 0.0 && p1 == 0.0 {
            continue;
        }
        let lr = p1 / p0;
        m.0 += p1 * lr;
        m.1 += p0 * lr * lr;
        m.2 += p1 * lr * lr;
        m.3 += p0 * (p0 / p1).ln();
        m.4 += p1 * (p1 / p0).ln();
    }
    m
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// One-step martingale check on `d = 1, k = 20, μ = 1`: a state after frames
/// `0..=t` is pushed one frame further `rollouts` times, each with a source
/// drawn from the current posterior. Returns `(mean(t), average mean(t+1), SE)`.
pub fn martingale_check(seed: u64, t: u64, rollouts: usize) -> (f64, f64, f64) {
    let exp = Experiment::new(
        1,
        20,
        ChannelPair::gaussian(1.0).unwrap(),
        StoppingRule::FixedHorizon(t + 1),
        t + 1,
        SumPath::Direct,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = exp.support().vertex(rng.random_range(0..exp.n() as usize));
    let mut world = WorldState::new(source, Arc::clone(exp.window())).unwrap();
    let mut state = exp.prior().unwrap();
    for _ in 0..=t {
        state
            .update(&world.next_frame(exp.channel(), &mut rng), exp.channel())
            .unwrap();
    }
    let next: Vec<f64> = (0..rollouts)
        .map(|_| {
            let src = exp.support().vertex(state.sample_index(&mut rng));
            let mut w = WorldState::starting_at(src, Arc::clone(exp.window()), t + 1).unwrap();
            let mut s = state.clone();
            s.update(&w.next_frame(exp.channel(), &mut rng), exp.channel())
                .unwrap();
            s.mean()[0]
        })
        .collect();
    let (avg, se) = mean_se(&next);
    (state.mean()[0], avg, se)
}

struct MeanAt {
    t: i64,
    mean: Vec<f64>,
}

impl TrialObserver for MeanAt {
    fn on_step(&mut self, _: &ObservationFrame, p: &PosteriorState) -> cascade_core::Result<()> {
        if p.time() == self.t {
            self.mean = p.mean().to_vec();
        }
        Ok(())
    }
}

/// Per-trial `‖v̂(0) − v0‖² − ‖v̂(t) − v0‖² − ‖v̂(t) − v̂(0)‖²` on
/// `d = 1, k = 20, μ = 1`; orthogonal increments make its mean zero.
pub fn orthogonality_residuals(trials: u64, t: u64, seed: u64) -> Vec<f64> {
    let exp = Experiment::new(
        1,
        20,
        ChannelPair::gaussian(1.0).unwrap(),
        StoppingRule::FixedHorizon(t),
        t,
        SumPath::Direct,
    )
    .unwrap();
    (0..trials)
        .map(|id| {
            let mut obs = MeanAt { t: 0, mean: vec![] };
            let rec = exp.run_trial(id, seed, Some(&mut obs)).unwrap();
            let src = rec.source.coords()[0] as f64;
            let (m0, mt) = (obs.mean[0], rec.estimate[0]);
            (m0 - src).powi(2) - (mt - src).powi(2) - (mt - m0).powi(2)
        })
        .collect()
}
