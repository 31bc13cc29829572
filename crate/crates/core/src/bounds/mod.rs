//! Branching-process and site-percolation bounds.
//!
//! For `beta1 = 0` the symptomatic sites are dominated by a Galton-Watson
//! process with offspring mean `mu = 4d gamma / (1 + gamma)`: each `2`
//! creates on average at most `4d` asymptomatic sites and each of those
//! turns symptomatic before recovering with probability `gamma / (1 + gamma)`.
//! For large `beta1` a site whose `2d` outgoing type-1 arrows all fire
//! before it recovers or turns symptomatic is "open", and open sites
//! percolate once `p(beta1, gamma)` exceeds the site percolation threshold.

mod gw;
mod percolation;

pub use gw::{gw_sample, gw_simulate, simulate_tree, GwSample, GwTree};
pub use percolation::{beta_bar, percolation_mc, site_open_prob, PercolationEstimate, PC_UPPER_2D};

use serde::{Serialize, Serializer};

use crate::error::{ensure_rate, Error, Result};
use crate::stats::CompensatedSum;

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(())
}

pub fn gw_offspring_mean(d: usize, gamma: f64) -> Result<f64> {
    check_dim(d)?;
    ensure_rate("gamma", gamma)?;
    Ok(4.0 * d as f64 * gamma / (1.0 + gamma))
}

/// `gamma` below which the branching bound is subcritical: `1 / (4d - 1)`.
pub fn gamma_threshold(d: usize) -> f64 {
    1.0 / (4.0 * d as f64 - 1.0)
}

fn subcritical_mu(d: usize, gamma: f64) -> Result<f64> {
    let mu = gw_offspring_mean(d, gamma)?;
    if mu >= 1.0 {
        return Err(Error::Domain(format!("offspring mean {mu} >= 1; the bound is vacuous")));
    }
    Ok(mu)
}

/// Bound `mu^(r-1)` on the probability that the infection started by a
/// single `2` ever reaches distance `r`.
pub fn gw_radius_bound(d: usize, gamma: f64, r: u32) -> Result<f64> {
    let mu = subcritical_mu(d, gamma)?;
    if r == 0 {
        return Err(Error::InvalidParameter("radius must be at least 1".into()));
    }
    Ok(mu.powi(r as i32 - 1))
}

/// Expected total number of `2`s in the dominating tree, `1 / (1 - mu)`.
pub fn gw_total_mean(d: usize, gamma: f64) -> Result<f64> {
    Ok(1.0 / (1.0 - subcritical_mu(d, gamma)?))
}

/// `2d sum_{j >= r} (2j + 3)^(d-1) mu^j`, the bound on an infection path
/// entering the cube of radius `r` from outside.
pub fn exterior_path_bound(d: usize, gamma: f64, r: u32) -> Result<f64> {
    let mu = subcritical_mu(d, gamma)?;
    if mu == 0.0 {
        let first = if r == 0 { 3f64.powi(d as i32 - 1) } else { 0.0 };
        return Ok(2.0 * d as f64 * first);
    }
    // terms grow until j ~ (d - 1) / -ln(mu), then decay geometrically
    let peak = ((d as f64 - 1.0) / -mu.ln()).ceil() as u64;
    let mut sum = CompensatedSum::default();
    let mut j = r as u64;
    loop {
        let term = ((d as f64 - 1.0) * ((2 * j + 3) as f64).ln() + j as f64 * mu.ln()).exp();
        sum.add(term);
        if j >= peak && term <= 1e-15 * sum.value() {
            break;
        }
        j += 1;
        if j - r as u64 > 100_000_000 {
            return Err(Error::Domain("exterior series did not converge".into()));
        }
    }
    Ok(2.0 * d as f64 * sum.value())
}

/// A bound, or a marker that the hypotheses do not hold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    Value(f64),
    NotApplicable,
}

impl Bound {
    fn from(r: Result<f64>) -> Self {
        r.map(Bound::Value).unwrap_or(Bound::NotApplicable)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Bound::Value(v) => Some(*v),
            Bound::NotApplicable => None,
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bound::Value(v) => s.serialize_f64(*v),
            Bound::NotApplicable => s.serialize_str("not applicable"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub dim: usize,
    pub beta1: f64,
    pub gamma: f64,
    pub radius: u32,
    pub mu: f64,
    pub gamma_threshold: f64,
    pub subcritical: bool,
    pub radius_bound: Bound,
    pub total_mean: Bound,
    pub exterior_bound: Bound,
    pub p_open: f64,
    pub target_p: f64,
    pub beta_bar: f64,
}

pub fn bounds_report(d: usize, beta1: f64, gamma: f64, radius: u32, target_p: f64) -> Result<BoundsReport> {
    let mu = gw_offspring_mean(d, gamma)?;
    Ok(BoundsReport {
        dim: d,
        beta1,
        gamma,
        radius,
        mu,
        gamma_threshold: gamma_threshold(d),
        subcritical: mu < 1.0,
        radius_bound: Bound::from(gw_radius_bound(d, gamma, radius)),
        total_mean: Bound::from(gw_total_mean(d, gamma)),
        exterior_bound: Bound::from(exterior_path_bound(d, gamma, radius)),
        p_open: site_open_prob(beta1, gamma, d)?,
        target_p,
        beta_bar: beta_bar(gamma, d, target_p)?,
    })
}
