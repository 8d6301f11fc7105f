//! Seeded question-order shuffling.
//!
//! The generator is xorshift64* (Vigna, 2014), seeded through one round of
//! the SplitMix64 finalizer so that small or zero seeds still produce a
//! well-mixed, non-zero state:
//!
//! ```text
//! seed state:  z = seed + 0x9E3779B97F4A7C15
//!              z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!              z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!              x = z ^ (z >> 31)            (x = 0x9E3779B97F4A7C15 if x == 0)
//! next:        x ^= x >> 12; x ^= x << 25; x ^= x >> 27
//!              output = x * 0x2545F4914F6CDD1D
//! ```
//!
//! All arithmetic wraps modulo 2^64. The permutation is a Fisher–Yates
//! shuffle walking `i` from `n - 1` down to `1` and swapping `i` with
//! `next() % (i + 1)`. Any language with 64-bit unsigned integers can
//! reproduce the exact same order for a given seed.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// xorshift64* generator with a SplitMix64-derived initial state.
#[derive(Clone, Debug)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(GOLDEN_GAMMA);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        if z == 0 {
            z = GOLDEN_GAMMA;
        }
        Self { state: z }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }
}

/// Returns a permutation of `0..n` determined entirely by `seed`.
pub fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = XorShift64Star::new(seed);
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    order
}
