//! Deterministic random streams.
//!
//! Every run is keyed by a 64-bit seed. Within a run, independent substreams
//! are obtained from the ChaCha8 stream counter, so the environment noise and
//! each player's action draws never share state. Identical `(seed, stream)`
//! pairs yield bit-identical sequences on any platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Substream used for payoff noise.
pub const STREAM_NOISE: u64 = 0;
/// Substream used for player 1 action draws.
pub const STREAM_P1: u64 = 1;
/// Substream used for player 2 action draws.
pub const STREAM_P2: u64 = 2;

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw on `[lo, hi)`; returns `lo` when the interval is empty.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}
