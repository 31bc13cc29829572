use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use rayon::prelude::*;
use serde::Serialize;

use super::check_dim;
use crate::error::{ensure_rate, Result};
use crate::rng::{replica_rng, rng_from_seed};
use crate::stats::{mean_interval, Estimate, Z95};

/// Generation sizes of one Galton-Watson tree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GwTree {
    /// `generations[n]` is the number of individuals in generation `n`.
    pub generations: Vec<u64>,
    pub total: u64,
    pub extinct: bool,
    /// The population exceeded the cap and the tree was cut short.
    pub truncated: bool,
}

const POPULATION_CAP: u64 = 10_000_000;

/// Grows a tree from one root for `generations` generations with the given
/// offspring sampler.
pub fn simulate_tree<R: Rng, F: FnMut(&mut R) -> u64>(mut offspring: F, generations: usize, rng: &mut R) -> GwTree {
    let mut sizes = vec![1u64];
    let mut truncated = false;
    for _ in 0..generations {
        let current = *sizes.last().expect("root");
        if current == 0 {
            break;
        }
        if current > POPULATION_CAP {
            truncated = true;
            break;
        }
        let next = (0..current).map(|_| offspring(rng)).sum();
        sizes.push(next);
    }
    let extinct = *sizes.last().expect("root") == 0;
    while sizes.len() <= generations && extinct {
        sizes.push(0);
    }
    GwTree { total: sizes.iter().sum(), generations: sizes, extinct, truncated }
}

/// Offspring of one `2`: `K = 2d + sum of 2d Geometric(1/2) - 1` ones, each
/// becoming a `2` with probability `gamma / (1 + gamma)`.
fn symptomatic_offspring<R: Rng>(d: usize, gamma: f64) -> impl FnMut(&mut R) -> u64 {
    let geo = Geometric::new(0.5).expect("valid probability");
    let q = gamma / (1.0 + gamma);
    move |rng: &mut R| {
        let extras: u64 = (0..2 * d).map(|_| geo.sample(rng)).sum();
        let k = 2 * d as u64 + extras;
        if q == 0.0 {
            0
        } else {
            Binomial::new(k, q).expect("valid binomial").sample(rng)
        }
    }
}

/// One dominating tree for dimension `d` and rate `gamma`.
pub fn gw_simulate(d: usize, gamma: f64, generations: usize, seed: u64) -> Result<GwTree> {
    check_dim(d)?;
    ensure_rate("gamma", gamma)?;
    let mut rng = rng_from_seed(seed);
    Ok(simulate_tree(symptomatic_offspring(d, gamma), generations, &mut rng))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GwSample {
    pub trees: usize,
    /// Mean size of each generation.
    pub mean_generation: Vec<f64>,
    /// Fraction of trees alive at each generation.
    pub alive: Vec<f64>,
    pub total: Estimate,
    pub extinct_fraction: f64,
}

/// Statistics of `trees` independent dominating trees.
pub fn gw_sample(d: usize, gamma: f64, generations: usize, trees: usize, seed: u64) -> Result<GwSample> {
    check_dim(d)?;
    ensure_rate("gamma", gamma)?;
    let all: Vec<GwTree> = (0..trees as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, 0, i);
            simulate_tree(symptomatic_offspring(d, gamma), generations, &mut rng)
        })
        .collect();
    let n = trees.max(1) as f64;
    let mut mean_generation = vec![0.0; generations + 1];
    let mut alive = vec![0.0; generations + 1];
    for t in &all {
        for (g, &size) in t.generations.iter().enumerate() {
            mean_generation[g] += size as f64 / n;
            if size > 0 {
                alive[g] += 1.0 / n;
            }
        }
    }
    let totals: Vec<f64> = all.iter().map(|t| t.total as f64).collect();
    Ok(GwSample {
        trees,
        mean_generation,
        alive,
        total: mean_interval(&totals, Z95, (1.0, f64::INFINITY)),
        extinct_fraction: all.iter().filter(|t| t.extinct).count() as f64 / n,
    })
}
