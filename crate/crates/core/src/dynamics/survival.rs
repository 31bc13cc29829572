use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CtmcSimulator, InitialCondition, Params, Variant};
use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;
use crate::rng::replica_rng;
use crate::stats::{mean_interval, wilson, Estimate, Z95};

/// Fraction of replicas still infected at `t_max` (Wilson interval) and
/// the mean infected density at `t_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub replicas: usize,
    pub survived: usize,
    pub probability: Estimate,
    pub density: Estimate,
}

/// Estimates survival up to `t_max` from `replicas` independent runs.
/// Same as [`survival_estimate_at`] for grid point `0`.
pub fn survival_estimate(
    params: &Params,
    geometry: LatticeGeometry,
    initial: InitialCondition,
    t_max: f64,
    replicas: usize,
    seed: u64,
) -> Result<SurvivalEstimate> {
    survival_estimate_at(params, geometry, initial, t_max, replicas, seed, 0)
}

/// Survival estimate whose replica seeds are derived from
/// `(seed, point, replica)`, so distinct grid points use distinct streams.
pub fn survival_estimate_at(
    params: &Params,
    geometry: LatticeGeometry,
    initial: InitialCondition,
    t_max: f64,
    replicas: usize,
    seed: u64,
    point: u64,
) -> Result<SurvivalEstimate> {
    params.validate()?;
    initial.validate()?;
    if replicas == 0 {
        return Err(Error::InvalidParameter("need at least one replica".into()));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
    }
    let outcomes: Vec<(bool, f64)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<(bool, f64)> {
            let mut rng = replica_rng(seed, point, r);
            let start = initial.build(geometry, &mut rng)?;
            let mut sim = CtmcSimulator::new(start, params, rng)?;
            sim.advance_to(t_max);
            Ok((!sim.is_extinct(), sim.density().infected()))
        })
        .collect::<Result<_>>()?;
    let survived = outcomes.iter().filter(|o| o.0).count();
    let densities: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    Ok(SurvivalEstimate {
        replicas,
        survived,
        probability: wilson(survived, replicas, Z95),
        density: mean_interval(&densities, Z95, (0.0, 1.0)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BetaDirection {
    Beta1,
    Beta2,
}

/// Bisection for the critical infection rate along one direction.
#[derive(Clone, Debug)]
pub struct BetaCSearch {
    pub direction: BetaDirection,
    /// The fixed parameters; the varied rate is overwritten.
    pub base: Params,
    pub geometry: LatticeGeometry,
    pub initial: InitialCondition,
    pub t_max: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Survival probability at `t_max` that defines "supercritical".
    pub threshold: f64,
    /// Stop once the bracket is at most this wide.
    pub tolerance: f64,
    pub bracket: (f64, f64),
}

impl BetaCSearch {
    pub fn new(direction: BetaDirection, base: Params, geometry: LatticeGeometry, bracket: (f64, f64)) -> Self {
        Self {
            direction,
            base,
            geometry,
            initial: InitialCondition::SingleAsymptomatic,
            t_max: 100.0,
            replicas: 400,
            seed: 0,
            threshold: 0.5,
            tolerance: 0.3,
            bracket,
        }
    }

    fn at(&self, beta: f64) -> Result<Params> {
        let mut p = self.base;
        match self.direction {
            BetaDirection::Beta1 => p.beta1 = beta,
            BetaDirection::Beta2 => p.beta2 = beta,
        }
        p.validate()?;
        Ok(p)
    }

    /// Whether survival is known to be monotone over the whole bracket.
    pub fn monotonicity_proved(&self) -> bool {
        let (lo, hi) = self.bracket;
        match (self.direction, self.base.variant) {
            (_, Variant::Collapsed) => true,
            (BetaDirection::Beta1, _) => self.base.gamma == 0.0 || hi <= self.base.beta2,
            (BetaDirection::Beta2, _) => lo >= self.base.beta1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BetaCBracket {
    pub lo: f64,
    pub hi: f64,
    pub evaluations: Vec<(f64, SurvivalEstimate)>,
    pub monotonicity_proved: bool,
}

impl BetaCBracket {
    pub fn contains(&self, beta: f64) -> bool {
        self.lo <= beta && beta <= self.hi
    }
}

/// Bisects on the varied rate against the survival threshold. Every
/// evaluation reuses the same replica seeds.
pub fn estimate_beta_c(search: &BetaCSearch) -> Result<BetaCBracket> {
    let (mut lo, mut hi) = search.bracket;
    if !(lo < hi) || !(search.tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need lo < hi and a positive tolerance, got [{lo}, {hi}] and {}",
            search.tolerance
        )));
    }
    if !(0.0..=1.0).contains(&search.threshold) {
        return Err(Error::InvalidParameter(format!("threshold {} outside [0, 1]", search.threshold)));
    }
    let mut evaluations = Vec::new();
    let mut eval = |beta: f64| -> Result<bool> {
        let est = survival_estimate(
            &search.at(beta)?,
            search.geometry,
            search.initial,
            search.t_max,
            search.replicas,
            search.seed,
        )?;
        let above = est.probability.value >= search.threshold;
        evaluations.push((beta, est));
        Ok(above)
    };
    let lo_above = eval(lo)?;
    let hi_above = eval(hi)?;
    if lo_above == hi_above {
        return Err(Error::Bracket(format!(
            "both ends of [{lo}, {hi}] are {} the survival threshold {}",
            if lo_above { "above" } else { "below" },
            search.threshold
        )));
    }
    if lo_above {
        return Err(Error::Bracket(format!(
            "survival decreases across [{lo}, {hi}]; expected it to increase"
        )));
    }
    while hi - lo > search.tolerance {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(BetaCBracket { lo, hi, evaluations, monotonicity_proved: search.monotonicity_proved() })
}
