//! Deterministic 64-bit generator (SplitMix64) and seed derivation.
//!
//! Chains must reproduce bit-for-bit across runs and platforms, so the
//! generator is pinned here instead of going through an external crate.

/// SplitMix64 stream. One `next_u64` per advance.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        finalize(self.state)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// SplitMix64 finalizer (Stafford mix13).
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a seed with a stream label: finalizer applied to
/// `a XOR (b * GOLDEN_GAMMA)`.
pub fn mix(a: u64, b: u64) -> u64 {
    finalize(a ^ b.wrapping_mul(GOLDEN_GAMMA))
}

/// Derived seed for (scenario, size index) under a base seed.
pub fn derive_seed(base_seed: u64, scenario: u64, size_index: u64) -> u64 {
    mix(mix(base_seed, scenario), size_index)
}
