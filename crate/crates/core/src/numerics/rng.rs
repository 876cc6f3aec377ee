//! Seeded random streams.
//!
//! Every stream is ChaCha20 (`rand_chacha::ChaCha20Rng`) keyed by
//! `seed_from_u64(seed)` with an explicit 64-bit stream selector. ChaCha20
//! output is specified bit-for-bit, so a given `(seed, stream)` pair yields
//! the same sequence on every platform. Distinct stream selectors give
//! independent sequences even when two roles share a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Stream selectors used across the crate.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const DATA: u64 = 2;
    pub const KEY: u64 = 3;
    pub const CHANNEL: u64 = 4;
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Derives a child stream, e.g. one per SNR point of a sweep.
    pub fn derive(seed: u64, stream: u64, index: u64) -> Self {
        Self::with_stream(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15), stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw from the closed interval `[lo, hi]`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..=hi)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn bit(&mut self) -> f64 {
        if self.rng.random::<bool>() {
            1.0
        } else {
            0.0
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::with_stream(42, streams::DATA);
        let mut b = RngStream::with_stream(42, streams::DATA);
        for _ in 0..1000 {
            assert_eq!(a.unit().to_bits(), b.unit().to_bits());
        }
    }

    #[test]
    fn streams_are_distinct() {
        let mut a = RngStream::with_stream(42, streams::DATA);
        let mut b = RngStream::with_stream(42, streams::KEY);
        let xs: Vec<f64> = (0..64).map(|_| a.bit()).collect();
        let ys: Vec<f64> = (0..64).map(|_| b.bit()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn first_draw_is_pinned() {
        // Guards against silent algorithm changes across dependency upgrades.
        let mut a = RngStream::new(0);
        assert_eq!(a.unit().to_bits(), PINNED_FIRST_UNIT);
    }

    const PINNED_FIRST_UNIT: u64 = 4_582_680_331_966_470_080;
}
