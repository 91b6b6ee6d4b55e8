//! Seeded random streams.
//!
//! All randomness goes through PCG-XSL-RR 128/64 (`rand_pcg::Pcg64`), which
//! has period 2^128 per stream and 2^127 selectable streams. A run with seed
//! `s` and replication `k` uses stream `k` of the generator whose state is
//! derived from `s`, so replications never overlap and results do not depend
//! on how replications are scheduled.

use rand_pcg::Pcg64;

// SplitMix64 finaliser; spreads nearby seeds across the 128-bit state.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for replication `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> Pcg64 {
    let hi = mix64(seed);
    let lo = mix64(hi ^ seed.rotate_left(17));
    let state = (u128::from(hi) << 64) | u128::from(lo);
    Pcg64::new(state, u128::from(stream))
}
