//! Seeded random streams with derivable substreams.
//!
//! A stream is a ChaCha12 generator keyed by a 64-bit seed and positioned on
//! one of its 2^64 independent stream counters. `RngStream::substream(seed, k)`
//! depends only on `(seed, k)`, so replicate `k` sees the same draws no matter
//! how many replicates run or in which order. `derive` produces child streams
//! from the parent's identity, never from its consumed state.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Child stream determined by this stream's identity and `index`.
    pub fn derive(&self, index: u64) -> Self {
        let key = splitmix64(splitmix64(self.seed ^ splitmix64(self.stream)) ^ index);
        Self::substream(key, index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Chi-square draw with `df` degrees of freedom (`df > 0`).
    pub fn chi_square(&mut self, df: f64) -> f64 {
        ChiSquared::new(df)
            .expect("positive degrees of freedom")
            .sample(&mut self.rng)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}
