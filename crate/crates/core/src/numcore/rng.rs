//! Seeded, stream-separated random numbers.
//!
//! Every random quantity in a run comes from one root seed. Each purpose
//! (data generation, initialization, Gumbel noise, ...) reads its own
//! ChaCha8 stream: the generator is keyed by the 64-bit seed and the
//! stream id selects an independent keystream, so replaying one purpose
//! never perturbs another. Per-candidate seeds are derived with
//! [`derive_seed`], a SplitMix64 mix of the root seed and an index.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream ids, one per purpose.
pub mod streams {
    pub const DATA: u64 = 1;
    pub const TEACHER: u64 = 2;
    pub const INIT: u64 = 3;
    pub const SPLIT: u64 = 4;
    pub const SHUFFLE: u64 = 5;
    pub const GUMBEL: u64 = 6;
    pub const ONE_HOT: u64 = 7;
    pub const RANDOM_SEARCH: u64 = 8;
    pub const ARCH_SHUFFLE: u64 = 9;
    /// Data streams for dataset parts start here (`DATA_PART + part`).
    pub const DATA_PART: u64 = 16;
}

#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Rng {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw strictly inside (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        self.inner.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th child of `root` (candidate init seeds, per-seed runs).
pub fn derive_seed(root: u64, index: u64) -> u64 {
    splitmix64(root ^ splitmix64(index.wrapping_add(1)))
}
