//! Exact stochastic simulation and analysis of the three-state contact
//! process with an asymptomatic state.
//!
//! Sites of a periodic lattice are healthy (`0`), infected without
//! symptoms (`1`) or infected with symptoms (`2`). Healthy sites are
//! infected at rate `beta1 * f1 + beta2 * f2`, where `f_i` is the fraction
//! of nearest neighbours in state `i`; asymptomatic sites become
//! symptomatic at rate `gamma`; every infected site recovers at rate one.
//!
//! The crate is organised as:
//!
//! * [`lattice`]: torus geometry, configurations, PGM snapshots.
//! * [`dynamics`]: the exact event-driven simulator, graphical
//!   representation (Poisson scaffold) replay, survival estimates.
//! * [`coupling`]: monotone couplings of two processes on shared clocks.
//! * [`meanfield`]: the homogeneous-mixing ODE and its stability analysis.
//! * [`bounds`]: branching-process and site-percolation bounds with
//!   Monte Carlo counterparts.

pub mod bounds;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod meanfield;
pub mod rng;
pub mod stats;

pub use dynamics::{InitialCondition, Params, Trajectory, Variant};
pub use error::{Error, Result};
pub use lattice::{Configuration, Density, LatticeGeometry, State};
