//! Counter-based uniform draws keyed by `(seed, slot, position)`.
//!
//! Each draw is a pure function of its key, so a pass over the data can be
//! replayed bit for bit without carrying generator state between passes.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const SLOT_MUL: u64 = 0xd1b5_4a32_d192_ed03;
const POS_MUL: u64 = 0xaef1_7502_108e_f2d9;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
pub fn keyed_u64(seed: u64, slot: u64, pos: u64) -> u64 {
    let h = mix64(seed.wrapping_add(GOLDEN));
    let h = mix64(h ^ slot.wrapping_add(1).wrapping_mul(SLOT_MUL));
    mix64(h ^ pos.wrapping_add(1).wrapping_mul(POS_MUL))
}

/// Uniform in `[0, 1)` with 53 random bits.
#[inline]
pub fn keyed_uniform(seed: u64, slot: u64, pos: u64) -> f64 {
    (keyed_u64(seed, slot, pos) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derives an independent seed for a sub-stream (per trial, per role).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    keyed_u64(seed, tag, u64::MAX)
}
