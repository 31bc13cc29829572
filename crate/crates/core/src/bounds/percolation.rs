use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::check_dim;
use crate::error::{ensure_rate, Error, Result};
use crate::rng::replica_rng;
use crate::stats::{pairwise_sum, wilson, Estimate, Z95};

/// Rigorous upper bound on the site percolation threshold of the square
/// lattice. (The numerical value is about 0.5927.)
pub const PC_UPPER_2D: f64 = 7.0 / 8.0;

/// Probability that all `2d` type-1 arrows out of a site ring before the
/// site leaves state `1`:
/// `sum_k C(2d, k) (-1)^k / (1 + k beta1 / (2d (1 + gamma)))`.
pub fn site_open_prob(beta1: f64, gamma: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    ensure_rate("beta1", beta1)?;
    ensure_rate("gamma", gamma)?;
    let n = 2 * d;
    let r = beta1 / (n as f64 * (1.0 + gamma));
    let mut binom = 1.0f64;
    let mut terms = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        terms.push(sign * binom / (1.0 + k as f64 * r));
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    Ok(pairwise_sum(&terms).clamp(0.0, 1.0))
}

/// The `beta1` at which [`site_open_prob`] equals `target`, by bisection to
/// relative width `1e-9`.
pub fn beta_bar(gamma: f64, d: usize, target: f64) -> Result<f64> {
    check_dim(d)?;
    ensure_rate("gamma", gamma)?;
    if !(0.0..1.0).contains(&target) {
        return Err(Error::InvalidParameter(format!("target probability must be in [0, 1), got {target}")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let p = |b: f64| site_open_prob(b, gamma, d);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while p(hi)? < target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Domain(format!("target {target} not reached")));
        }
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if p(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PercolationEstimate {
    pub p_open: f64,
    pub radius: usize,
    pub replicas: usize,
    pub reached: usize,
    pub probability: Estimate,
}

/// Grows the open cluster of the origin in `[-radius, radius]^d`, deciding
/// openness lazily. Returns whether a site at sup-distance `radius` is reached.
fn reaches_boundary<R: Rng>(p: f64, d: usize, radius: usize, rng: &mut R) -> bool {
    let side = 2 * radius + 1;
    let n = side.pow(d as u32);
    let mut seen = vec![false; n];
    let centre: usize = (0..d).map(|a| radius * side.pow(a as u32)).sum();
    let mut queue = VecDeque::from([centre]);
    seen[centre] = true;
    let mut coords = vec![0usize; d];
    while let Some(x) = queue.pop_front() {
        let mut rest = x;
        for c in coords.iter_mut() {
            *c = rest % side;
            rest /= side;
        }
        if coords.iter().any(|&c| c == 0 || c == side - 1) {
            return true;
        }
        if !rng.random_bool(p) {
            continue;
        }
        let mut stride = 1;
        for _ in 0..d {
            for y in [x - stride, x + stride] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
            stride *= side;
        }
    }
    false
}

/// Fraction of replicas whose open cluster from the origin reaches the
/// boundary of `[-radius, radius]^d`, with a Wilson interval.
pub fn percolation_mc(beta1: f64, gamma: f64, d: usize, radius: usize, replicas: usize, seed: u64) -> Result<PercolationEstimate> {
    if d < 2 {
        return Err(Error::InvalidParameter("percolation estimates need d >= 2".into()));
    }
    if radius == 0 || replicas == 0 {
        return Err(Error::InvalidParameter("radius and replicas must be positive".into()));
    }
    let p_open = site_open_prob(beta1, gamma, d)?;
    let reached = (0..replicas as u64)
        .into_par_iter()
        .filter(|&i| reaches_boundary(p_open, d, radius, &mut replica_rng(seed, 0, i)))
        .count();
    Ok(PercolationEstimate { p_open, radius, replicas, reached, probability: wilson(reached, replicas, Z95) })
}
