//! Seeding scheme for independent replicas.
//!
//! Every replica owns its own ChaCha stream, seeded from a hash of
//! `(master seed, grid point, replica index)`. Results never depend on
//! which thread ran which replica.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replica `replica` of grid point `point` under `master`.
pub fn derive_seed(master: u64, point: u64, replica: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point) ^ replica.rotate_left(17))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn replica_rng(master: u64, point: u64, replica: u64) -> SimRng {
    rng_from_seed(derive_seed(master, point, replica))
}
