//! Counter-based pseudo-random draws: every value is a pure function of its
//! key, so any pixel's noise can be regenerated without replaying a stream.

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a sequence of words into one 64-bit value.
#[inline]
pub fn mix(words: &[u64]) -> u64 {
    let mut h = 0x6A09_E667_F3BC_C909u64;
    for &w in words {
        h = splitmix64(h ^ w);
    }
    h
}

/// Uniform in `[0, 1)`.
#[inline]
pub fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw keyed by `h` (Box-Muller).
#[inline]
pub fn normal(h: u64) -> f64 {
    let u1 = unit(splitmix64(h ^ 0xA5A5_A5A5_A5A5_A5A5)).max(f64::MIN_POSITIVE);
    let u2 = unit(splitmix64(h ^ 0x5A5A_5A5A_5A5A_5A5A));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Stable 64-bit digest of a string (used to derive per-image seeds).
pub fn str_key(s: &str) -> u64 {
    mix(&s.bytes().map(u64::from).collect::<Vec<_>>())
}
