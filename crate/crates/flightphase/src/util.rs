//! Small shared helpers.

/// FNV-1a 64-bit hash. Used to fingerprint vocabularies, corpora, and model
/// artifacts; stable across platforms and releases by construction.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
