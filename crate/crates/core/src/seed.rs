//! Stable 64-bit seed derivation.
//!
//! Batch runs derive one seed per (config, run) pair from a single base
//! seed; robots derive independent RNG streams from the run seed. All of
//! it goes through the same avalanche mix so the streams are decorrelated
//! but exactly reproducible across executions and platforms.

/// splitmix64 finalizer; full-avalanche mix of one 64-bit word.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combine a seed with one component (config index, robot id, stream tag).
pub fn mix2(seed: u64, a: u64) -> u64 {
    mix(seed ^ mix(a))
}

/// Combine a seed with two components.
pub fn mix3(seed: u64, a: u64, b: u64) -> u64 {
    mix2(mix2(seed, a), b)
}

/// FNV-1a over a byte slice; used to fingerprint genomes in event logs.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
