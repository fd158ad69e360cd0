//! Counter-based random streams.
//!
//! The service time of edge `e` in replicate `i` is a pure function of
//! `(master_seed, i, e.key)`: the ChaCha8 keystream for `master_seed`, stream
//! number `e.key`, read at word position `2 i`. Nothing depends on how
//! replicates are scheduled, so results are identical for any thread count,
//! and adding an edge to a network leaves every other edge's draws untouched.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream reserved for the event simulator's sequential generator.
const SIMULATOR_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngPolicy {
    master_seed: u64,
}

/// Maps 64 random bits to a uniform in (0, 1]; never 0, so `-ln u` is finite.
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF exponential variate of the given rate.
#[inline]
pub fn exponential(bits: u64, rate: f64) -> f64 {
    -open_unit(bits).ln() / rate
}

impl RngPolicy {
    pub fn new(master_seed: u64) -> Self {
        RngPolicy { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    fn stream(&self, key: u64, replicate: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(key);
        rng.set_word_pos(2 * replicate as u128);
        rng
    }

    /// The raw 64 bits assigned to `(replicate, key)`.
    pub fn bits(&self, replicate: u64, key: u64) -> u64 {
        self.stream(key, replicate).next_u64()
    }

    pub fn exponential(&self, replicate: u64, key: u64, rate: f64) -> f64 {
        exponential(self.bits(replicate, key), rate)
    }

    /// Fills `out[j]` with the exponential draw of replicate `first + j`.
    pub(crate) fn fill_exponentials(&self, key: u64, first: u64, rate: f64, out: &mut [f64]) {
        let mut rng = self.stream(key, first);
        for x in out {
            *x = exponential(rng.next_u64(), rate);
        }
    }

    /// Sequential generator for the event simulator.
    pub fn simulator_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(SIMULATOR_STREAM);
        rng
    }
}
