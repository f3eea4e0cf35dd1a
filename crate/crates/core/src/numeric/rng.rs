use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use super::C64;

/// Seeded, platform-independent random stream (ChaCha12).
///
/// Independent streams for parallel trials come from [`RngStream::derive`].
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha12Rng,
}

pub const ALGORITHM_ID: &str = "chacha12";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed, rng: ChaCha12Rng::seed_from_u64(seed) }
    }

    /// Stream keyed by `seed` and a path of identifiers such as
    /// `(cell, trial)`. Distinct paths give unrelated streams.
    pub fn derive(seed: u64, path: &[u64]) -> Self {
        let mut key = splitmix64(seed);
        for &p in path {
            key = splitmix64(key ^ splitmix64(p.wrapping_add(0x5851_f42d_4c95_7f2d)));
        }
        RngStream { seed, rng: ChaCha12Rng::seed_from_u64(key) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm_id(&self) -> &'static str {
        ALGORITHM_ID
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform01(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[a, b)`.
    pub fn uniform(&mut self, a: f64, b: f64) -> f64 {
        debug_assert!(a < b);
        map_unit(self.uniform01(), a, b)
    }

    pub fn gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Real and imaginary parts drawn independently from N(0, 1).
    pub fn complex_gaussian(&mut self) -> C64 {
        let re = self.gaussian();
        C64::new(re, self.gaussian())
    }
}

/// Affine map of a unit draw onto `[a, b)`.
pub(crate) fn map_unit(x: f64, a: f64, b: f64) -> f64 {
    a + (b - a) * x
}
