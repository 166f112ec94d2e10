//! Seed derivation.
//!
//! Every random quantity in a run is drawn from its own ChaCha8 stream whose
//! seed is derived from the master seed and a path of integers (purpose tag,
//! device, frame, antenna, ...). Derivation is a SplitMix64 chain, so seeds
//! are stable across platforms and compiler versions, and any frame can be
//! regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags mixed into derived seeds so that different streams of the
/// same (device, frame) never collide.
pub mod tag {
    pub const DEVICE: u64 = 0x01;
    pub const BS_ANTENNA: u64 = 0x02;
    pub const PILOT: u64 = 0x03;
    pub const CHANNEL: u64 = 0x04;
    pub const NOISE: u64 = 0x05;
    pub const SHUFFLE: u64 = 0x06;
    pub const INIT: u64 = 0x07;
    pub const TRIAL: u64 = 0x08;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and an ordered path of components.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Deterministic RNG for a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of the channel realisation for one (device, frame, antenna).
pub fn frame_channel_seed(master: u64, device: u64, frame: u64, antenna: u64) -> u64 {
    derive(master, &[tag::CHANNEL, device, frame, antenna])
}

/// Seed of the receiver noise for one (device, frame, antenna).
pub fn frame_noise_seed(master: u64, device: u64, frame: u64, antenna: u64) -> u64 {
    derive(master, &[tag::NOISE, device, frame, antenna])
}
