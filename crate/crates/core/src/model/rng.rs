use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::Scalar;

/// A `(seed, stream index)` pair naming one reproducible random stream.
///
/// Streams with the same seed and distinct indices are independent ChaCha
/// streams; every consumer of randomness derives its own index instead of
/// sharing a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub index: u64,
}

impl SeededStream {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { seed, index }
    }

    /// Sub-stream for a path, task or replicate. Indices are spread so that
    /// nested derivations with small indices do not collide.
    pub fn derive(&self, sub: u64) -> Self {
        Self {
            seed: self.seed,
            index: self
                .index
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(sub.wrapping_add(1)),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }
}

/// `count` i.i.d. `N(mean, variance)` draws from `stream`.
pub fn draw_normal_increments<S: Scalar>(stream: SeededStream, count: usize, mean: S, variance: S) -> Vec<S> {
    let sd = variance.max(S::zero()).sqrt();
    if sd == S::zero() {
        return vec![mean; count];
    }
    let mut rng = stream.rng();
    (0..count)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            mean + sd * S::lit(z)
        })
        .collect()
}
