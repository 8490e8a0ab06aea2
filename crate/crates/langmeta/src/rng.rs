//! Seeded noise with a fixed (seed, step, coordinate) -> Gaussian mapping.
//!
//! The mapping is position-addressable so that the discrete algorithm, the
//! diffusion proxy, and coupling-style comparisons can share an identical
//! noise realization: step index selects the ChaCha stream, coordinates are
//! drawn in order within the stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// splitmix64 finalizer; used to derive replica seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Replica-seed splitter: seed XOR a multiplied index, mixed through splitmix64.
pub fn derive_replica_seed(seed: u64, replica: u64) -> u64 {
    splitmix64(seed ^ replica.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Position-addressable Gaussian stream.
pub struct NoiseSource {
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Fills `out` with the standard normals addressed by (seed, step, 0..d).
    pub fn fill_step(&mut self, step: u64, out: &mut [f64]) {
        self.rng.set_stream(step);
        self.rng.set_word_pos(0);
        for x in out.iter_mut() {
            *x = self.rng.sample(StandardNormal);
        }
    }

    /// Single variate at (seed, step, coord); coordinates are drawn in order.
    pub fn gaussian(&mut self, step: u64, coord: usize) -> f64 {
        self.rng.set_stream(step);
        self.rng.set_word_pos(0);
        let mut v = 0.0;
        for _ in 0..=coord {
            v = self.rng.sample(StandardNormal);
        }
        v
    }
}
