//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 (portable, bit-reproducible across
//! platforms). A stream is keyed by `(seed, trial, purpose)`: the generator is
//! seeded from `seed` and its 64-bit stream id is set to
//! `trial << 8 | purpose`, so every trial and every consumer inside a trial
//! draws from a disjoint sequence regardless of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The discriminant is the low byte of the stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Data = 0,
    ImportanceSampling = 1,
    UniformSampling = 2,
    Projection = 3,
    Fuzz = 4,
}

pub fn stream(seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 8) | purpose as u64);
    rng
}
