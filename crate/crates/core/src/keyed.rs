//! Counter-based keyed randomness.
//!
//! Every random quantity used by the engines is a pure function of
//! `(seed, step, vertex, channel)`. Two processes that consult the same key
//! see the same uniform regardless of evaluation order, which is what makes
//! the couplings between processes well defined.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn absorb(state: u64, word: u64) -> u64 {
    mix64(state.wrapping_add(GOLDEN) ^ mix64(word.wrapping_add(GOLDEN)))
}

/// Maps a 64-bit word to a uniform in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Purpose tags used when splitting seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Replicate = 0x5245_504C,
    Field = 0x4649_454C,
    Sites = 0x5349_5445,
    Reactivation = 0x5245_4143,
    Renewal = 0x5245_4E57,
    Centering = 0x4345_4E54,
    Permutation = 0x5045_524D,
    Auxiliary = 0x4155_5849,
}

/// Derives a child seed from `(master, index, purpose)`.
pub fn derive_seed(master: u64, index: u64, purpose: Purpose) -> u64 {
    absorb(absorb(absorb(master, purpose as u64), index), 0x5EED)
}

/// Sequential generator for a replicate, seeded through [`derive_seed`].
pub fn replicate_rng(master: u64, index: u64, purpose: Purpose) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index, purpose))
}

/// Independent streams multiplexed over one keyed family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Channel {
    /// Radius of influence `I^n_v`.
    Radius = 1,
    /// Reactivation clock `B^n_v`.
    Clock = 2,
    /// Site occupancy flag.
    Site = 3,
}

/// A keyed family of uniforms indexed by `(step, vertex, channel)`.
///
/// `offset` shifts the step index; a probe launched at absolute step `s`
/// reads `uniform(k, ..)` from absolute step `s + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeyedStream {
    seed: u64,
    offset: u64,
}

impl KeyedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, offset: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Same family, with step indices shifted forward by `by`.
    pub fn shifted(&self, by: u64) -> Self {
        Self {
            seed: self.seed,
            offset: self.offset + by,
        }
    }

    #[inline]
    pub fn bits(&self, step: u64, vertex: i64, channel: Channel) -> u64 {
        let s = absorb(self.seed, channel as u64);
        let s = absorb(s, step.wrapping_add(self.offset));
        absorb(s, vertex as u64)
    }

    #[inline]
    pub fn uniform(&self, step: u64, vertex: i64, channel: Channel) -> f64 {
        to_unit(self.bits(step, vertex, channel))
    }
}
