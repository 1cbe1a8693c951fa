//! Counter-keyed random streams.
//!
//! Every random draw in the simulator comes from a stream keyed by
//! `(seed, domain, a, b)`, typically `(seed, purpose, worker, index)`. Results
//! therefore do not depend on the order in which streams are consumed, which
//! is what makes generation and simulation schedule-independent.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::stats::inverse_normal_cdf;

pub type StreamRng = ChaCha8Rng;

/// Stream domains. Distinct purposes never share a key.
pub mod domain {
    pub const DATA_POINT: u64 = 1;
    pub const BYZANTINE_SET: u64 = 2;
    pub const LABEL_CORRUPTION: u64 = 3;
    pub const FORGED_MESSAGE: u64 = 4;
    pub const MINIBATCH: u64 = 5;
    pub const HOLDOUT: u64 = 6;
    pub const MONTE_CARLO: u64 = 7;
    pub const SAMPLER: u64 = 8;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for the key `(seed, domain, a, b)`.
pub fn keyed_rng(seed: u64, domain: u64, a: u64, b: u64) -> StreamRng {
    let mut state = seed;
    let mut key = [0u8; 32];
    let words = [domain, a, b, 0x5EED];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        state ^= w.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw on the open interval (0, 1).
pub fn uniform_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw by inverse-CDF transform of one open uniform.
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    // uniform_open never returns 0 or 1, so the inverse CDF cannot fail
    inverse_normal_cdf(uniform_open(rng)).unwrap_or(0.0)
}

pub fn rademacher<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}
