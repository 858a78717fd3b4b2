//! Deterministic seed derivation.
//!
//! All randomness in the pipeline flows from one master seed. Each stage
//! derives its own seed from `(master, stage tag, indices)` so that, e.g.,
//! repetition 3 of class 5 in the evaluation harness draws the same samples
//! no matter which feature representation is being evaluated and no matter
//! how the work is scheduled.

/// splitmix64 finalizer; good avalanche, stable across platforms.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derive a child seed from the master seed, a stage tag and index parts.
pub fn derive_seed(master: u64, tag: &str, parts: &[u64]) -> u64 {
    let mut state = mix(master ^ fnv1a(tag));
    for p in parts {
        state = mix(state ^ *p);
    }
    state
}
