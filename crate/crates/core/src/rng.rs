//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream derived from a
//! 64-bit seed and a stream id, so adding draws in one place never shifts the
//! draws seen elsewhere.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counter-based pseudorandom stream keyed by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::keyed(seed, 0)
    }

    pub fn keyed(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Derive an independent child stream. The parent advances by one draw.
    pub fn split(&mut self, stream: u64) -> Self {
        let child_seed = self.inner.next_u64();
        Self::keyed(child_seed, stream)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
