//! Continuous-time dynamics of the process.
//!
//! Two exact constructions are provided and agree in law:
//!
//! * [`CtmcSimulator`] / [`run_ctmc`]: a rejection-free Gillespie simulator
//!   whose sites are grouped into rate classes, so the total rate is kept as
//!   integer class counts times per-class rates.
//! * [`EventStream`] / [`evolve_from_stream`]: the graphical representation.
//!   Arrows, dots and crosses are pre-sampled as Poisson processes and the
//!   process is built from them deterministically.

mod contact;
mod ctmc;
mod scaffold;
mod stream;
mod survival;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_rate, Error, Result};
use crate::lattice::{Configuration, Density, LatticeGeometry, State};

pub use contact::{evolve_basic_contact, BasicContactTrajectory};
pub use ctmc::{run_ctmc, BookkeepingError, CtmcSimulator};
pub use scaffold::{Channel, Placement, Scaffold, ScaffoldEvent, Target};
pub use stream::{evolve_from_stream, sample_event_stream, Clock, EventStream};
pub use survival::{
    estimate_beta_c, survival_estimate, survival_estimate_at, BetaCBracket, BetaCSearch,
    BetaDirection, SurvivalEstimate,
};

/// Which member of the model family is simulated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    Standard,
    /// `0 -> 1` at `beta1 * f1`, `1 -> 2` at `1 + gamma`, `2 -> 0` at 1.
    /// Requires `beta2 == 0`.
    ForestFire,
    /// The `gamma = infinity` limit: newly infected sites are symptomatic
    /// immediately, giving a basic contact process with rate `beta2`.
    Collapsed,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Variant::Standard),
            "forest-fire" | "forestfire" => Ok(Variant::ForestFire),
            "collapsed" => Ok(Variant::Collapsed),
            _ => Err(Error::InvalidParameter(format!("unknown variant {s:?}"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Standard => "standard",
            Variant::ForestFire => "forest-fire",
            Variant::Collapsed => "collapsed",
        })
    }
}

/// Model parameters `(beta1, beta2, gamma)` and the variant flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    #[serde(default)]
    pub variant: Variant,
}

impl Params {
    pub fn new(beta1: f64, beta2: f64, gamma: f64) -> Result<Self> {
        Self::with_variant(beta1, beta2, gamma, Variant::Standard)
    }

    pub fn with_variant(beta1: f64, beta2: f64, gamma: f64, variant: Variant) -> Result<Self> {
        let p = Self { beta1, beta2, gamma, variant };
        p.validate()?;
        Ok(p)
    }

    pub fn forest_fire(beta1: f64, gamma: f64) -> Result<Self> {
        Self::with_variant(beta1, 0.0, gamma, Variant::ForestFire)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_rate("beta1", self.beta1)?;
        ensure_rate("beta2", self.beta2)?;
        ensure_rate("gamma", self.gamma)?;
        if self.variant == Variant::ForestFire && self.beta2 != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "the forest-fire variant requires beta2 = 0, got {}",
                self.beta2
            )));
        }
        Ok(())
    }

    pub fn rate_model(&self) -> RateModel {
        match self.variant {
            Variant::Standard => RateModel {
                infect_from_1: self.beta1,
                infect_from_2: self.beta2,
                one_to_two: self.gamma,
                one_to_zero: 1.0,
                two_to_zero: 1.0,
                collapsed: false,
            },
            Variant::ForestFire => RateModel {
                infect_from_1: self.beta1,
                infect_from_2: 0.0,
                one_to_two: 1.0 + self.gamma,
                one_to_zero: 0.0,
                two_to_zero: 1.0,
                collapsed: false,
            },
            Variant::Collapsed => RateModel {
                infect_from_1: 0.0,
                infect_from_2: self.beta2,
                one_to_two: f64::INFINITY,
                one_to_zero: 0.0,
                two_to_zero: 1.0,
                collapsed: true,
            },
        }
    }
}

/// Per-site transition rates of the general three-state model.
///
/// A healthy site with `n1` asymptomatic and `n2` symptomatic neighbours
/// out of `2d` is infected at `infect_from_1 * n1/2d + infect_from_2 * n2/2d`.
/// When `collapsed` is set the state `1` does not exist: infections produce
/// `2` directly and any `1` present is promoted at once.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub infect_from_1: f64,
    pub infect_from_2: f64,
    pub one_to_two: f64,
    pub one_to_zero: f64,
    pub two_to_zero: f64,
    pub collapsed: bool,
}

impl RateModel {
    pub fn validate(&self) -> Result<()> {
        ensure_rate("infection rate from 1", self.infect_from_1)?;
        ensure_rate("infection rate from 2", self.infect_from_2)?;
        ensure_rate("rate 2 -> 0", self.two_to_zero)?;
        if !self.collapsed {
            ensure_rate("rate 1 -> 2", self.one_to_two)?;
            ensure_rate("rate 1 -> 0", self.one_to_zero)?;
        }
        Ok(())
    }

    pub fn infected_state(&self) -> State {
        if self.collapsed {
            State::Symptomatic
        } else {
            State::Asymptomatic
        }
    }

    /// Infection rate of a healthy site with the given neighbour counts.
    #[inline]
    pub fn infection_rate(&self, n1: usize, n2: usize, degree: usize) -> f64 {
        let deg = degree as f64;
        self.infect_from_1 * (n1 as f64 / deg) + self.infect_from_2 * (n2 as f64 / deg)
    }

    /// Outgoing transitions `(target, rate)` of a site.
    pub fn transitions(&self, state: State, n1: usize, n2: usize, degree: usize) -> Vec<(State, f64)> {
        match state {
            State::Healthy if self.collapsed => {
                vec![(State::Symptomatic, self.infection_rate(0, n2, degree))]
            }
            State::Healthy => vec![(State::Asymptomatic, self.infection_rate(n1, n2, degree))],
            State::Asymptomatic if self.collapsed => vec![(State::Symptomatic, f64::INFINITY)],
            State::Asymptomatic if self.one_to_zero == 0.0 => vec![(State::Symptomatic, self.one_to_two)],
            State::Asymptomatic => vec![
                (State::Symptomatic, self.one_to_two),
                (State::Healthy, self.one_to_zero),
            ],
            State::Symptomatic => vec![(State::Healthy, self.two_to_zero)],
        }
    }
}

/// Local transition rates of site `site` in configuration `config`.
pub fn local_rates(site: usize, config: &Configuration, params: &Params) -> Result<Vec<(State, f64)>> {
    let geometry = config.geometry();
    let state = config.get(site)?;
    let nbrs = geometry.neighbors(site)?;
    let states = config.states();
    let n1 = nbrs.iter().filter(|&&y| states[y] == State::Asymptomatic).count();
    let n2 = nbrs.iter().filter(|&&y| states[y] == State::Symptomatic).count();
    Ok(params.rate_model().transitions(state, n1, n2, geometry.degree()))
}

/// How the lattice is populated at time zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialCondition {
    /// A single `1` at the origin, healthy elsewhere.
    SingleAsymptomatic,
    /// A single `2` at the origin, healthy elsewhere.
    SingleSymptomatic,
    AllSymptomatic,
    /// Independently per site: `1` with probability `p1`, `2` with `p2`.
    Bernoulli { p1: f64, p2: f64 },
}

impl InitialCondition {
    pub fn validate(&self) -> Result<()> {
        if let InitialCondition::Bernoulli { p1, p2 } = *self {
            let ok = (0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p2) && p1 + p2 <= 1.0;
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "bernoulli({p1},{p2}) needs p1, p2 >= 0 and p1 + p2 <= 1"
                )));
            }
        }
        Ok(())
    }

    pub fn build<R: Rng>(&self, geometry: LatticeGeometry, rng: &mut R) -> Result<Configuration> {
        self.validate()?;
        match *self {
            InitialCondition::SingleAsymptomatic => {
                Configuration::single(geometry, geometry.origin(), State::Asymptomatic)
            }
            InitialCondition::SingleSymptomatic => {
                Configuration::single(geometry, geometry.origin(), State::Symptomatic)
            }
            InitialCondition::AllSymptomatic => Ok(Configuration::uniform(geometry, State::Symptomatic)),
            InitialCondition::Bernoulli { p1, p2 } => {
                let states = (0..geometry.num_sites())
                    .map(|_| {
                        let u: f64 = rng.random();
                        if u < p1 {
                            State::Asymptomatic
                        } else if u < p1 + p2 {
                            State::Symptomatic
                        } else {
                            State::Healthy
                        }
                    })
                    .collect();
                Configuration::from_states(geometry, states)
            }
        }
    }
}

impl FromStr for InitialCondition {
    type Err = Error;

    /// Accepts `single-1`, `single-2`, `all-2`, `healthy` and
    /// `bernoulli:P1,P2` (also written `bernoulli(P1,P2)`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let ic = match s {
            "single-1" | "single1" => InitialCondition::SingleAsymptomatic,
            "single-2" | "single2" => InitialCondition::SingleSymptomatic,
            "all-2" | "all2" => InitialCondition::AllSymptomatic,
            "healthy" => InitialCondition::Bernoulli { p1: 0.0, p2: 0.0 },
            _ => {
                let body = s
                    .strip_prefix("bernoulli:")
                    .or_else(|| s.strip_prefix("bernoulli(").and_then(|b| b.strip_suffix(')')))
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown initial condition {s:?}")))?;
                let parts: Vec<&str> = body.split(',').map(str::trim).collect();
                let parse = |x: &str| {
                    x.parse::<f64>()
                        .map_err(|_| Error::InvalidParameter(format!("bad probability {x:?}")))
                };
                match parts.as_slice() {
                    [a, b] => InitialCondition::Bernoulli { p1: parse(a)?, p2: parse(b)? },
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "bernoulli needs two probabilities, got {body:?}"
                        )))
                    }
                }
            }
        };
        ic.validate()?;
        Ok(ic)
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::SingleAsymptomatic => f.write_str("single-1"),
            InitialCondition::SingleSymptomatic => f.write_str("single-2"),
            InitialCondition::AllSymptomatic => f.write_str("all-2"),
            InitialCondition::Bernoulli { p1, p2 } => write!(f, "bernoulli:{p1},{p2}"),
        }
    }
}

/// Sample times `0, dt, 2 dt, ...` strictly below `t_max`, then `t_max`.
pub fn sample_times(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("sample_dt must be positive, got {dt}")));
    }
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * dt;
        if t >= t_max * (1.0 - 1e-12) {
            break;
        }
        out.push(t);
        k += 1;
    }
    out.push(t_max);
    Ok(out)
}

/// Densities sampled along one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub densities: Vec<Density>,
    pub final_config: Configuration,
    /// First time at which no site is infected, if reached.
    pub extinction_time: Option<f64>,
}

impl Trajectory {
    pub fn final_density(&self) -> Density {
        self.densities.last().copied().unwrap_or_else(|| self.final_config.density())
    }

    /// CSV with header `t,u0,u1,u2`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,u0,u1,u2")?;
        for (t, d) in self.times.iter().zip(&self.densities) {
            writeln!(out, "{t},{},{},{}", d.u0, d.u1, d.u2)?;
        }
        Ok(())
    }
}
