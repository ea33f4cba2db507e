//! Counter-based seed splitting for per-trajectory generator streams.
//!
//! Every trajectory owns independent generators derived from
//! `(master_seed, trajectory_index, lane)`, so sampled values never depend on
//! the number of workers or on scheduling order.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator type used for every simulation stream.
pub type StreamRng = Xoshiro256PlusPlus;

/// Lane used to draw initial states (including rejection proposals).
pub const LANE_INIT: u64 = 0;
/// Lane used for transitions and refilled map digits.
pub const LANE_STEP: u64 = 1;
/// Lane reserved for validation probes.
pub const LANE_PROBE: u64 = 2;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream `(master, index, lane)`.
pub fn stream_seed(master: u64, index: u64, lane: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(b ^ lane.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7))
}

pub fn stream(master: u64, index: u64, lane: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(master, index, lane))
}

/// Uniform double in `[0, 1)` on the 2^-53 grid.
#[inline]
pub fn unit_f64(rng: &mut StreamRng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform digit in `0..k` via a widening multiply (bias at most `k / 2^64`).
#[inline]
pub fn digit(rng: &mut StreamRng, k: u32) -> u64 {
    ((rng.next_u64() as u128 * k as u128) >> 64) as u64
}
