//! Seeded, counter-based randomness.
//!
//! `RngStream` is a keyed counter generator: output `i` of a stream is
//! `mix64(key + i * GOLDEN)` where `mix64` is the SplitMix64 finalizer and
//! the key is a hash of `(seed, stream_id)`. Because each output depends
//! only on the key and the counter, streams are cheap to split, replayable
//! from any point, and independent of thread scheduling: the same
//! `(seed, stream_id)` always yields the same sequence, and distinct
//! stream ids behave like independent generators.

use alloc::vec::Vec;

use crate::stats::phi_inverse;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z
}

/// A splittable counter-based random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

impl RngStream {
    /// Stream identified by `(seed, stream_id)`.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let key = mix64(mix64(seed ^ GOLDEN).wrapping_add(mix64(stream_id)));
        Self { key, counter: 0 }
    }

    /// Derive an independent child stream. Children with distinct tags do
    /// not overlap with each other or with the parent.
    pub fn substream(&self, tag: u64) -> Self {
        Self {
            key: mix64(self.key.wrapping_add(mix64(tag ^ GOLDEN))),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform draw in the open interval (0, 1).
    pub fn next_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Uniform integer in [0, bound) by rejection-free scaling; fine for the
    /// small bounds used here (shuffling, index picking).
    pub fn next_below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        (self.next_u64() % bound as u64) as usize
    }

    /// Standard normal draw via the inverse CDF.
    pub fn next_standard_normal(&mut self) -> f64 {
        phi_inverse(self.next_f64()).expect("uniform draw is inside (0, 1)")
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i + 1);
            items.swap(i, j);
        }
    }
}

/// `dim` i.i.d. draws from N(0, sigma^2). A zero sigma yields the zero
/// vector but still consumes `dim` draws, so stream positions stay aligned
/// across sigma choices.
pub fn gaussian_sample(rng: &mut RngStream, dim: usize, sigma: f64) -> Vec<f64> {
    debug_assert!(sigma >= 0.0);
    (0..dim).map(|_| sigma * rng.next_standard_normal()).collect()
}
