//! Seeding conventions.
//!
//! Every sampler draws from ChaCha8, a counter-based generator whose output
//! is identical on every platform. A generator is identified by a 64-bit
//! seed plus a 64-bit stream id (`ChaCha8Rng::set_stream`), so samplers that
//! receive the same seed but serve different purposes never share output.
//!
//! The Monte Carlo harness derives one seed per (master seed, N, replication,
//! component) by folding the parts through SplitMix64, see [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids reserved for each sampler.
pub mod streams {
    pub const SBM_LAYER: u64 = 1;
    pub const COVARIATES: u64 = 2;
    pub const RESPONSE: u64 = 3;
    pub const NETWORK_NOISE: u64 = 4;
    pub const FIXTURE: u64 = 5;
}

pub fn generator(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of identifiers into a child seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}
