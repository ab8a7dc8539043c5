//! Seeded random streams.
//!
//! All randomness comes from ChaCha8, a counter-based generator: a
//! `(seed, stream)` pair fully determines the sequence, so Monte-Carlo
//! trials can be split across workers and still reproduce bit-for-bit.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Generator for `seed` on stream 0.
pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// Independent generator for one logical stream (e.g. one trial block).
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
