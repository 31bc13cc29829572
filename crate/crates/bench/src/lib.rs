//! Fixtures shared by the benchmarks in `benches/`.

use cpas_core::rng::rng_from_seed;
use cpas_core::{Configuration, InitialCondition, LatticeGeometry, Params};

/// A supercritical standard-variant parameter set.
pub fn active_params() -> Params {
    Params::new(2.0, 4.0, 0.5).expect("valid rates")
}

/// A `side^dim` torus with a tenth of the sites infected at random.
pub fn seeded_start(dim: usize, side: usize, seed: u64) -> Configuration {
    let geo = LatticeGeometry::new(dim, side).expect("valid lattice");
    InitialCondition::Bernoulli { p1: 0.05, p2: 0.05 }
        .build(geo, &mut rng_from_seed(seed))
        .expect("valid initial condition")
}
