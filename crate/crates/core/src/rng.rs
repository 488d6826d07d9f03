//! Small deterministic sampling helpers over a ChaCha8 stream.
//!
//! Hand-rolled rather than pulled from a distributions crate so the exact
//! draw sequence is owned by this codebase and can never shift under a
//! dependency upgrade; reproducibility of old runs depends on it.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in [0, 1) with 53 random bits.
pub(crate) fn u01(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * u01(rng)
}

/// Standard normal via Box-Muller; two uniforms per draw, no caching, so the
/// stream position after n draws is always 2n.
pub(crate) fn gauss(rng: &mut impl RngCore) -> f64 {
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = u01(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Fisher-Yates shuffle driven by next_u64.
pub(crate) fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}
