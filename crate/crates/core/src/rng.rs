//! Portable, seedable random numbers.
//!
//! Every random draw in the crate goes through [`PortableRng`], a thin
//! wrapper over xoshiro256++ seeded with SplitMix64. Derived quantities are
//! defined bit-exactly so datasets can be regenerated in other languages:
//!
//! * `next_f64` is `(x >> 11) * 2^-53`, uniform on `[0, 1)`;
//! * `below(n)` is `(x * n) >> 64` computed in 128 bits;
//! * sub-stream seeds are `splitmix64(base + index)`.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// One SplitMix64 output step for state `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th independent sub-stream of `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base.wrapping_add(index))
}

#[derive(Clone, Debug)]
pub struct PortableRng(Xoshiro256PlusPlus);

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        PortableRng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `0..n`. `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Fisher-Yates shuffle driven by [`Self::below`].
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    pub(crate) fn inner_mut(&mut self) -> &mut Xoshiro256PlusPlus {
        &mut self.0
    }
}
