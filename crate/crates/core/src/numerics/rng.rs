use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Algorithm identifier written into every output header.
pub const RNG_ID: &str = "chacha20/rand_chacha-0.9";

/// A single-owner random stream. Independent streams for replicates or chains
/// come from [`RngStream::split`], which selects a distinct ChaCha stream
/// under the same key, so results never depend on scheduling.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// Child stream `index` of the same master seed.
    pub fn split(&self, index: u64) -> Self {
        // Stream 0 is the master; children start at 1.
        Self::with_stream(self.seed, self.stream.wrapping_mul(1 << 20).wrapping_add(index + 1))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Position in 32-bit words within the current stream.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }
}

impl RngCore for RngStream {
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
