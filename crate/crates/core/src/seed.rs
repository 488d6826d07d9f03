//! Seed derivation for named RNG sub-streams.
//!
//! Every randomized component draws from its own [`rand_chacha::ChaCha8Rng`]
//! seeded through [`derive_seed`], so adding or removing one consumer never
//! shifts the draws seen by another. Labels are plain strings such as
//! `"init"` or `"shuffle/2"`.

/// Derives a child seed from a root seed and a stream label.
///
/// The label is hashed with FNV-1a, combined with the root, and the result is
/// passed through a splitmix64 finalizer so that similar labels and nearby
/// roots still produce unrelated seeds.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

    let mut hash = FNV_OFFSET;
    for &byte in label.as_bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    splitmix64(root ^ hash)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
