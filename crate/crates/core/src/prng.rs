//! Seeded pseudo-random number generation.
//!
//! Every random decision in the harness (curriculum shuffles, layout
//! generation, obstacle motion, baseline agents) draws from [`Pcg32`], and
//! every child seed is derived with [`split`]. Both are fixed algorithms so
//! that a logged seed reproduces a run in any implementation.

const PCG_MULTIPLIER: u64 = 6364136223846793005;

/// Stream selector used by [`Pcg32::from_seed`].
///
/// The increment of the underlying LCG is `(DEFAULT_STREAM << 1) | 1`.
pub const DEFAULT_STREAM: u64 = 0xda3e39cb94b95bdb;

const GOLDEN_GAMMA: u64 = 0x9E3779B97F4A7C15;

/// First output of a SplitMix64 generator whose state is `seed`.
#[inline]
pub fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a salt.
#[inline]
pub fn split(parent: u64, salt: u64) -> u64 {
    splitmix64(parent ^ salt.wrapping_mul(GOLDEN_GAMMA))
}

/// PCG32 (XSH-RR output, 64-bit LCG state).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    /// Seeds the generator exactly like the reference `pcg32_srandom_r`.
    pub fn new(initstate: u64, initseq: u64) -> Self {
        let mut rng = Pcg32 {
            state: 0,
            inc: (initseq << 1) | 1,
        };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(initstate);
        rng.next_u32();
        rng
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, DEFAULT_STREAM)
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(PCG_MULTIPLIER).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    /// Uniform integer in `0..bound` without modulo bias.
    ///
    /// Panics if `bound` is zero.
    pub fn below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0, "Pcg32::below called with bound 0");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u32();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    /// Uniform index in `0..len`.
    pub fn index(&mut self, len: usize) -> usize {
        self.below(u32::try_from(len).expect("index bound exceeds u32")) as usize
    }

    /// Uniform value in `[0, 1)` with 32 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        f64::from(self.next_u32()) / 4_294_967_296.0
    }

    /// Fisher–Yates shuffle: descending index, swap with `below(i + 1)`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}
