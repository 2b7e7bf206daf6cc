//! Geometry and exact combinatorics of the integer lattice `Z^d` under the
//! L1 metric.
//!
//! Counts are computed from closed-form identities over signed-coordinate
//! compositions:
//!
//! ```text
//! |∂N(t)| = Σ_j 2^j C(d,j) C(t-1,j-1)      (t ≥ 1)
//! |N(t)|  = Σ_j 2^j C(d,j) C(t,j)
//! h(t)    = Σ_{s≤t} |N(s)| = Σ_j 2^j C(d,j) C(t+1,j+1)
//! ```
//!
//! Enumeration is kept for iteration over supports and as a test oracle.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice vertex, labelled by its integer coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vertex(pub Vec<i64>);

impl Vertex {
    pub fn new(coords: Vec<i64>) -> Self {
        Vertex(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Vertex(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Componentwise sum, used to translate by an offset.
    pub fn offset(&self, delta: &[i64]) -> Vertex {
        debug_assert_eq!(self.dim(), delta.len());
        Vertex(self.0.iter().zip(delta).map(|(a, b)| a + b).collect())
    }

    pub fn l1_norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.0.iter().map(|&c| (c as f64) * (c as f64)).sum()
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for Vertex {
    fn from(coords: Vec<i64>) -> Self {
        Vertex(coords)
    }
}

pub fn l1_distance(u: &Vertex, v: &Vertex) -> Result<u64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    Ok(l1_between(u.coords(), v.coords()))
}

#[inline]
pub(crate) fn l1_between(a: &[i64], b: &[i64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum()
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn to_count(x: u128) -> u64 {
    u64::try_from(x).expect("lattice count exceeds u64")
}

/// Number of vertices at L1 distance exactly `t` from a fixed vertex.
pub fn sphere_size(d: usize, t: u64) -> u64 {
    assert!(d >= 1, "lattice dimension must be positive");
    if t == 0 {
        return 1;
    }
    let d = d as u64;
    let total: u128 = (1..=d.min(t))
        .map(|j| (1u128 << j) * binomial(d, j) * binomial(t - 1, j - 1))
        .sum();
    to_count(total)
}

/// Number of vertices within L1 distance `t`.
pub fn ball_size(d: usize, t: u64) -> u64 {
    assert!(d >= 1, "lattice dimension must be positive");
    let d = d as u64;
    let total: u128 = (0..=d.min(t))
        .map(|j| (1u128 << j) * binomial(d, j) * binomial(t, j))
        .sum();
    to_count(total)
}

/// The neighborhood growth function `h(t) = Σ_{s=0}^{t} |N(s)|`.
pub fn growth(d: usize, t: u64) -> u64 {
    assert!(d >= 1, "lattice dimension must be positive");
    let d = d as u64;
    let total: u128 = (0..=d.min(t + 1))
        .map(|j| (1u128 << j) * binomial(d, j) * binomial(t + 1, j + 1))
        .sum();
    to_count(total)
}

/// Integer pseudo-inverse of [`growth`]: the least `t ≥ 0` with `h(t) ≥ z`.
pub fn growth_inverse(d: usize, z: f64) -> u64 {
    if z.is_nan() || z <= 1.0 {
        // h(0) = 1, so every z ≤ 1 (and NaN) maps to zero.
        return 0;
    }
    let mut hi = 1u64;
    while (growth(d, hi) as f64) < z {
        hi *= 2;
    }
    let mut lo = hi / 2;
    // invariant: h(lo) < z ≤ h(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if (growth(d, mid) as f64) < z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Offsets of the radius-`t` ball in lexicographic order.
pub fn ball_offsets(d: usize, t: u64) -> Vec<Vec<i64>> {
    let mut out = Vec::with_capacity(ball_size(d, t) as usize);
    let mut cur = vec![0i64; d];
    fill_offsets(&mut cur, 0, t as i64, &mut |c| out.push(c.to_vec()));
    out
}

fn fill_offsets(cur: &mut [i64], axis: usize, budget: i64, emit: &mut impl FnMut(&[i64])) {
    if axis == cur.len() {
        emit(cur);
        return;
    }
    for x in -budget..=budget {
        cur[axis] = x;
        fill_offsets(cur, axis + 1, budget - x.abs(), emit);
    }
    cur[axis] = 0;
}

/// All vertices within distance `t` of `center`, lexicographically ordered.
pub fn enumerate_ball(center: &Vertex, t: u64) -> Vec<Vertex> {
    ball_offsets(center.dim(), t)
        .into_iter()
        .map(|off| center.offset(&off))
        .collect()
}

/// `Σ_{s=0}^{t} |N_u(s) ∩ N_v(s)|`.
pub fn overlap_growth(u: &Vertex, v: &Vertex, t: u64) -> Result<u64> {
    let dist = l1_distance(u, v)?;
    let d = u.dim();
    let mut total = 0u64;
    // The two radius-s balls are disjoint while 2s < dist.
    let first = dist.div_ceil(2);
    let mut cur = vec![0i64; d];
    for s in first..=t {
        let mut count = 0u64;
        fill_offsets(&mut cur, 0, s as i64, &mut |off| {
            let dv: u64 = off
                .iter()
                .zip(u.coords())
                .zip(v.coords())
                .map(|((o, a), b)| (a + o).abs_diff(*b))
                .sum();
            if dv <= s {
                count += 1;
            }
        });
        total += count;
    }
    Ok(total)
}

/// Quadrant-counting bounds on the sphere size:
///
/// ```text
/// 2^d/(d-1)^(d-1) · (t-1)^(d-1)  ≤  |∂N(t)|  ≤  2^d e^(d-1)/(d-1)^(d-1) · (t+d-1)^(d-1)
/// ```
///
/// Only defined for `d ≥ 2` and `t ≥ d`.
pub fn sphere_bounds(d: usize, t: u64) -> Result<(f64, f64)> {
    if d < 2 || t < d as u64 {
        return Err(Error::InvalidInput(format!(
            "sphere bounds need d >= 2 and t >= d (got d = {d}, t = {t})"
        )));
    }
    let dm1 = (d - 1) as i32;
    let base = 2f64.powi(d as i32) / ((d - 1) as f64).powi(dm1);
    let lower = base * ((t - 1) as f64).powi(dm1);
    let upper = base * std::f64::consts::E.powi(dm1) * ((t + d as u64 - 1) as f64).powi(dm1);
    Ok((lower, upper))
}

/// `Σ_{u ∈ N_0(r)} ‖u‖₂^p`, summed exactly in lexicographic order.
pub fn pnorm_sum(r: u64, p: f64, d: usize) -> f64 {
    let mut cur = vec![0i64; d];
    let mut total = 0.0;
    fill_offsets(&mut cur, 0, r as i64, &mut |off| {
        let sq: f64 = off.iter().map(|&c| (c * c) as f64).sum();
        if sq > 0.0 {
            total += sq.powf(p / 2.0);
        }
    });
    total
}

/// An L1 ball materialized as a lexicographically ordered vertex list, with
/// an index over its bounding box for O(1) coordinate lookup.
#[derive(Debug, Clone)]
pub struct BallRegion {
    dim: usize,
    center: Vertex,
    radius: u64,
    coords: Vec<i64>,
    lo: Vec<i64>,
    extent: Vec<usize>,
    strides: Vec<usize>,
    box_of: Vec<usize>,
    slot_of_box: Vec<u32>,
}

/// The uniform prior's support `V_n = N_center(k)`.
pub type PriorSupport = BallRegion;

const NO_SLOT: u32 = u32::MAX;

impl BallRegion {
    pub fn new(center: Vertex, radius: u64) -> Self {
        let dim = center.dim();
        assert!(dim >= 1, "lattice dimension must be positive");
        let offsets = ball_offsets(dim, radius);
        assert!(offsets.len() < NO_SLOT as usize, "ball too large to index");
        let lo: Vec<i64> = center.coords().iter().map(|c| c - radius as i64).collect();
        let extent = vec![2 * radius as usize + 1; dim];
        let mut strides = vec![1usize; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * extent[axis + 1];
        }
        let box_len = strides[0] * extent[0];
        let mut coords = Vec::with_capacity(offsets.len() * dim);
        let mut box_of = Vec::with_capacity(offsets.len());
        let mut slot_of_box = vec![NO_SLOT; box_len];
        for (slot, off) in offsets.iter().enumerate() {
            let mut b = 0usize;
            for axis in 0..dim {
                let c = center.coords()[axis] + off[axis];
                coords.push(c);
                b += (off[axis] + radius as i64) as usize * strides[axis];
            }
            box_of.push(b);
            slot_of_box[b] = slot as u32;
        }
        BallRegion {
            dim,
            center,
            radius,
            coords,
            lo,
            extent,
            strides,
            box_of,
            slot_of_box,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &Vertex {
        &self.center
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.box_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.box_of.is_empty()
    }

    /// Coordinates of the `i`-th vertex in lexicographic order.
    pub fn coords(&self, i: usize) -> &[i64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertex(&self, i: usize) -> Vertex {
        Vertex(self.coords(i).to_vec())
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.len()).map(|i| self.vertex(i))
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        v.dim() == self.dim && l1_between(v.coords(), self.center.coords()) <= self.radius
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        let b = self.box_index(v.coords())?;
        match self.slot_of_box[b] {
            NO_SLOT => None,
            s => Some(s as usize),
        }
    }

    /// True when every radius-`r` ball around a vertex of `inner` lies in
    /// this region.
    pub fn covers(&self, inner: &BallRegion, r: u64) -> bool {
        inner.dim == self.dim
            && l1_between(inner.center.coords(), self.center.coords()) + inner.radius + r
                <= self.radius
    }

    pub(crate) fn box_index(&self, c: &[i64]) -> Option<usize> {
        if c.len() != self.dim {
            return None;
        }
        let mut b = 0usize;
        for (axis, &x) in c.iter().enumerate() {
            let rel = x - self.lo[axis];
            if rel < 0 || rel as usize >= self.extent[axis] {
                return None;
            }
            b += rel as usize * self.strides[axis];
        }
        Some(b)
    }

    pub(crate) fn box_len(&self) -> usize {
        self.slot_of_box.len()
    }

    pub(crate) fn box_of(&self, slot: usize) -> usize {
        self.box_of[slot]
    }

    pub(crate) fn box_extent(&self) -> &[usize] {
        &self.extent
    }

    pub(crate) fn box_strides(&self) -> &[usize] {
        &self.strides
    }

    /// Flat bounding-box deltas of the radius-`t` ball offsets.
    pub(crate) fn box_deltas(&self, t: u64) -> Vec<isize> {
        ball_offsets(self.dim, t)
            .iter()
            .map(|off| {
                off.iter()
                    .zip(&self.strides)
                    .map(|(&o, &s)| o as isize * s as isize)
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[i64]) -> Vertex {
        Vertex(c.to_vec())
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_distance(&v(&[0, 0]), &v(&[0, 0])).unwrap(), 0);
        assert_eq!(l1_distance(&v(&[1, -2]), &v(&[0, 0])).unwrap(), 3);
        assert_eq!(l1_distance(&v(&[3, 4, -1]), &v(&[1, 1, 1])).unwrap(), 7);
        assert!(matches!(
            l1_distance(&v(&[1]), &v(&[1, 2])),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn count_examples() {
        assert_eq!(sphere_size(2, 3), 12);
        assert_eq!(sphere_size(1, 5), 2);
        assert_eq!(sphere_size(3, 2), 18);
        assert_eq!(sphere_size(4, 0), 1);
        assert_eq!(ball_size(2, 1), 5);
        assert_eq!(ball_size(1, 2), 5);
        assert_eq!(ball_size(2, 2), 13);
        assert_eq!(growth(1, 2), 9);
        assert_eq!(growth(1, 0), 1);
        assert_eq!(growth(2, 2), 19);
    }

    #[test]
    fn closed_forms_agree_with_partial_sums() {
        for d in 1..=5 {
            let mut ball = 0;
            let mut h = 0;
            for t in 0..40 {
                ball += sphere_size(d, t);
                h += ball;
                assert_eq!(ball_size(d, t), ball, "ball d={d} t={t}");
                assert_eq!(growth(d, t), h, "growth d={d} t={t}");
            }
        }
    }

    #[test]
    fn growth_inverse_examples() {
        assert_eq!(growth_inverse(1, 9.0), 2);
        assert_eq!(growth_inverse(3, 0.0), 0);
        assert_eq!(growth_inverse(1, 10.0), 3);
        assert_eq!(growth_inverse(2, 1.0), 0);
        assert_eq!(growth_inverse(2, 1.5), 1);
        for d in 1..=4 {
            for t in 0..60 {
                assert_eq!(growth_inverse(d, growth(d, t) as f64), t);
            }
        }
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(
            enumerate_ball(&v(&[0]), 1),
            vec![v(&[-1]), v(&[0]), v(&[1])]
        );
        assert_eq!(enumerate_ball(&v(&[0, 0]), 0), vec![v(&[0, 0])]);
        let b = enumerate_ball(&v(&[1, 1]), 1);
        assert_eq!(
            b,
            vec![v(&[0, 1]), v(&[1, 0]), v(&[1, 1]), v(&[1, 2]), v(&[2, 1])]
        );
    }

    #[test]
    fn overlap_examples() {
        let u = v(&[0, 0]);
        assert_eq!(overlap_growth(&u, &u, 3).unwrap(), growth(2, 3));
        assert_eq!(overlap_growth(&u, &v(&[4, 3]), 3).unwrap(), 0);
        assert_eq!(overlap_growth(&v(&[0]), &v(&[2]), 2).unwrap(), 4);
    }

    #[test]
    fn sphere_bound_examples() {
        let (lo, hi) = sphere_bounds(2, 3).unwrap();
        assert!((lo - 8.0).abs() < 1e-12);
        assert!((hi - 16.0 * std::f64::consts::E).abs() < 1e-12);
        let (lo, hi) = sphere_bounds(2, 2).unwrap();
        assert!((lo - 4.0).abs() < 1e-12);
        assert!((hi - 12.0 * std::f64::consts::E).abs() < 1e-12);
        assert!(lo <= 8.0 && 8.0 <= hi);
        let (lo, hi) = sphere_bounds(3, 3).unwrap();
        let e2 = std::f64::consts::E.powi(2);
        assert!((lo - 8.0).abs() < 1e-12);
        assert!((hi - 50.0 * e2).abs() < 1e-9);
        assert!(lo <= 38.0 && 38.0 <= hi);
        assert!(sphere_bounds(1, 5).is_err());
        assert!(sphere_bounds(3, 2).is_err());
    }

    #[test]
    fn pnorm_examples() {
        assert_eq!(pnorm_sum(0, 3.0, 2), 0.0);
        assert!((pnorm_sum(2, 2.0, 1) - 10.0).abs() < 1e-12);
        let expect = 4.0 + 8.0 + 4.0 * 2f64.sqrt();
        assert!((pnorm_sum(2, 1.0, 2) - expect).abs() < 1e-12);
    }

    #[test]
    fn region_lookup_roundtrip() {
        let r = BallRegion::new(v(&[3, -2]), 4);
        assert_eq!(r.len() as u64, ball_size(2, 4));
        for i in 0..r.len() {
            assert_eq!(r.index_of(&r.vertex(i)), Some(i));
        }
        assert_eq!(r.index_of(&v(&[3 + 4, -2 + 1])), None);
        assert_eq!(r.index_of(&v(&[100, 0])), None);
        let inner = BallRegion::new(v(&[3, -1]), 1);
        assert!(r.covers(&inner, 2));
        assert!(!r.covers(&inner, 3));
    }
}
