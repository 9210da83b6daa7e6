//! Seed derivation.
//!
//! Every random stream in the toolkit is derived from one root seed: the
//! stage name and integer coordinates are folded with FNV-1a, then mixed with
//! the root through SplitMix64. The derivation is stable across platforms and
//! releases, so partial reruns reproduce the same streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over a byte string.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_extend(FNV_OFFSET, bytes)
}

fn fnv1a_extend(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed for `stage` at the given cell coordinates.
pub fn derive_seed(root: u64, stage: &str, coords: &[u64]) -> u64 {
    let mut h = fnv1a(stage.as_bytes());
    for c in coords {
        h = fnv1a_extend(h, &c.to_le_bytes());
    }
    splitmix64(root ^ splitmix64(h))
}

/// Deterministic generator for a derived seed.
pub fn rng_for(root: u64, stage: &str, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, stage, coords))
}
