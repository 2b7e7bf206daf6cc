//! Bayes filter over the prior support.
//!
//! Each candidate source `u` carries an unnormalized log-weight
//!
//! ```text
//! log X_u(t) = Σ_{s≤t} Σ_{w ∈ N_u(s)} log (dQ1/dQ0)(y_w(s))
//! ```
//!
//! which is advanced one frame at a time. Signals outside every candidate's
//! neighborhood contribute the same factor to all hypotheses and cancel, so
//! only the window around the support is ever read.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cascade_sim::ObservationFrame;
use crate::channels::ChannelPair;
use crate::error::{Error, Result};
use crate::lattice::{BallRegion, PriorSupport, Vertex};

/// How per-candidate neighborhood sums `Σ_{w ∈ N_u(t)} llr_w` are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumPath {
    /// Sum each ball directly, `O(n · |N(t)|)` per frame.
    #[default]
    Direct,
    /// Prefix sums for `d ≤ 2` (the L1 ball is an axis-aligned square in
    /// rotated coordinates); falls back to `Direct` in higher dimension.
    Accelerated,
}

#[derive(Debug, Clone)]
pub struct PosteriorState {
    support: Arc<PriorSupport>,
    window: Arc<BallRegion>,
    path: SumPath,
    time: i64,
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    mean_rel: Vec<f64>,
    mean: Vec<f64>,
    variance: f64,
    log_normalizer: f64,
}

impl PosteriorState {
    /// Uniform prior over `support`; frames will be read on `window`.
    pub fn uniform(
        support: Arc<PriorSupport>,
        window: Arc<BallRegion>,
        path: SumPath,
    ) -> Result<Self> {
        let n = support.len();
        Self::with_log_weights(support, window, path, vec![0.0; n])
    }

    /// Arbitrary initial log-weights over the support.
    pub fn with_log_weights(
        support: Arc<PriorSupport>,
        window: Arc<BallRegion>,
        path: SumPath,
        log_weights: Vec<f64>,
    ) -> Result<Self> {
        if support.dim() != window.dim() {
            return Err(Error::DimensionMismatch {
                left: support.dim(),
                right: window.dim(),
            });
        }
        if !window.covers(&support, 0) {
            return Err(Error::Coverage {
                window: window.radius(),
                needed: support.radius(),
            });
        }
        if log_weights.len() != support.len() {
            return Err(Error::InvalidInput(format!(
                "{} log-weights for a support of {} vertices",
                log_weights.len(),
                support.len()
            )));
        }
        let d = support.dim();
        let mut state = PosteriorState {
            support,
            window,
            path,
            time: -1,
            log_weights,
            probs: Vec::new(),
            mean_rel: vec![0.0; d],
            mean: vec![0.0; d],
            variance: 0.0,
            log_normalizer: 0.0,
        };
        state.refresh();
        Ok(state)
    }

    pub fn support(&self) -> &Arc<PriorSupport> {
        &self.support
    }

    pub fn window(&self) -> &Arc<BallRegion> {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    /// Index of the last absorbed frame; `-1` before any.
    pub fn time(&self) -> i64 {
        self.time
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Normalized posterior `π_u`, in support order.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Conditional-mean estimate `E[v0 | F_t]`.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// `E[‖v0 − v̂‖² | F_t]`.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// `log Z(t)`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// Most probable source; ties go to the lexicographically smallest.
    pub fn map_estimate(&self) -> Vertex {
        let mut best = 0;
        for (i, &lw) in self.log_weights.iter().enumerate() {
            if lw > self.log_weights[best] {
                best = i;
            }
        }
        self.support.vertex(best)
    }

    /// Draws a support index from the current posterior.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // u landed in the rounding gap above the final partial sum
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    /// Absorbs the frame `y(time + 1)`.
    pub fn update(&mut self, frame: &ObservationFrame, ch: &ChannelPair) -> Result<()> {
        let expected = self.time + 1;
        if frame.time() as i64 != expected {
            return Err(Error::Sequencing {
                expected,
                got: frame.time() as i64,
            });
        }
        let fw = frame.window();
        if !(Arc::ptr_eq(fw, &self.window)
            || (fw.center() == self.window.center() && fw.radius() == self.window.radius()))
        {
            return Err(Error::InvalidInput(
                "frame was generated on a different window".into(),
            ));
        }
        let t = frame.time();
        if !self.window.covers(&self.support, t) {
            return Err(Error::Coverage {
                window: self.window.radius(),
                needed: self.support.radius() + t,
            });
        }

        let mut field = vec![0.0; self.window.box_len()];
        for (slot, &y) in frame.values().iter().enumerate() {
            field[self.window.box_of(slot)] = ch.llr(y)?;
        }

        let increments = match (self.path, self.dim()) {
            (SumPath::Accelerated, 1) => self.sums_line(&field, t),
            (SumPath::Accelerated, 2) => self.sums_rotated(&field, t),
            _ => self.sums_direct(&field, t),
        };
        for (lw, inc) in self.log_weights.iter_mut().zip(increments) {
            *lw += inc;
        }
        self.time = expected;
        self.refresh();
        Ok(())
    }

    fn support_box(&self, slot: usize) -> usize {
        self.window
            .box_index(self.support.coords(slot))
            .expect("support lies inside the window")
    }

    fn sums_direct(&self, field: &[f64], t: u64) -> Vec<f64> {
        let deltas = self.window.box_deltas(t);
        (0..self.support.len())
            .map(|slot| {
                let base = self.support_box(slot) as isize;
                deltas.iter().map(|&dl| field[(base + dl) as usize]).sum()
            })
            .collect()
    }

    fn sums_line(&self, field: &[f64], t: u64) -> Vec<f64> {
        let mut prefix = Vec::with_capacity(field.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &x in field {
            acc += x;
            prefix.push(acc);
        }
        let t = t as usize;
        (0..self.support.len())
            .map(|slot| {
                let b = self.support_box(slot);
                prefix[b + t + 1] - prefix[b - t]
            })
            .collect()
    }

    fn sums_rotated(&self, field: &[f64], t: u64) -> Vec<f64> {
        // Box coords (i, j) map to (a, c) = (i + j, i - j + E - 1); the L1
        // ball becomes the square |Δa| ≤ t, |Δc| ≤ t. Cells of the wrong
        // parity hold no lattice point and stay zero.
        let ext = self.window.box_extent();
        let (rows, cols) = (ext[0], ext[1]);
        let side = rows + cols - 1;
        let stride = self.window.box_strides()[0];
        let mut table = vec![0.0; (side + 1) * (side + 1)];
        let at = |a: usize, c: usize| a * (side + 1) + c;
        for i in 0..rows {
            for j in 0..cols {
                let v = field[i * stride + j];
                if v != 0.0 {
                    table[at(i + j + 1, i + cols - j)] = v;
                }
            }
        }
        // summed-area table, inclusive of (a, c) at index (a + 1, c + 1)
        for a in 1..=side {
            let mut row = 0.0;
            for c in 1..=side {
                row += table[at(a, c)];
                table[at(a, c)] = table[at(a - 1, c)] + row;
            }
        }
        let t = t as usize;
        (0..self.support.len())
            .map(|slot| {
                let b = self.support_box(slot);
                let (i, j) = (b / stride, b % stride);
                let a0 = i + j;
                let c0 = i + cols - 1 - j;
                let (a_lo, a_hi) = (a0 - t, a0 + t + 1);
                let (c_lo, c_hi) = (c0 - t, c0 + t + 1);
                table[at(a_hi, c_hi)] - table[at(a_lo, c_hi)] - table[at(a_hi, c_lo)]
                    + table[at(a_lo, c_lo)]
            })
            .collect()
    }

    fn refresh(&mut self) {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        self.probs.clear();
        self.probs
            .extend(self.log_weights.iter().map(|&lw| (lw - max).exp()));
        let total: f64 = self.probs.iter().sum();
        for p in &mut self.probs {
            *p /= total;
        }
        self.log_normalizer = max + total.ln();

        // Moments are taken relative to the support center so large
        // coordinates do not cancel catastrophically.
        let d = self.dim();
        let center = self.support.center().coords();
        let mut mean_rel = vec![0.0; d];
        for (slot, &p) in self.probs.iter().enumerate() {
            for (m, (&x, &c)) in mean_rel
                .iter_mut()
                .zip(self.support.coords(slot).iter().zip(center))
            {
                *m += p * (x - c) as f64;
            }
        }
        let mut var = 0.0;
        for (slot, &p) in self.probs.iter().enumerate() {
            let sq: f64 = self
                .support
                .coords(slot)
                .iter()
                .zip(center)
                .zip(&mean_rel)
                .map(|((&x, &c), &m)| {
                    let dev = (x - c) as f64 - m;
                    dev * dev
                })
                .sum();
            var += p * sq;
        }
        self.mean = mean_rel
            .iter()
            .zip(center)
            .map(|(&m, &c)| c as f64 + m)
            .collect();
        self.mean_rel = mean_rel;
        self.variance = var;
    }
}
