//! Deterministic mixing helpers used for seed derivation and mock-client
//! decisions. Stable across platforms and library versions, unlike the
//! standard library's default hasher.

/// One splitmix64 step over two mixed inputs.
pub(crate) fn mix64(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over a string.
pub(crate) fn fnv1a(s: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in s.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Map a 64-bit value to a uniform fraction in [0, 1).
pub(crate) fn to_unit_fraction(z: u64) -> f64 {
    (z >> 11) as f64 / (1u64 << 53) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_is_deterministic_and_spread() {
        assert_eq!(mix64(1, 2), mix64(1, 2));
        assert_ne!(mix64(1, 2), mix64(2, 1));
        assert_ne!(fnv1a("a"), fnv1a("b"));
        let f = to_unit_fraction(mix64(42, fnv1a("input")));
        assert!((0.0..1.0).contains(&f));
    }
}
