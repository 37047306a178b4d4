//! SplitMix64, the fully specified generator behind dataset shuffling.
//!
//! Splits must be byte-for-byte reproducible across implementations and
//! platforms, so the shuffle generator is pinned to a published algorithm
//! rather than an ecosystem default that may change between versions:
//!
//! - state update: `state += 0x9E3779B97F4A7C15` (wrapping)
//! - output: `z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//!   z = (z ^ (z >> 27)) * 0x94D049BB133111EB; z ^ (z >> 31)`
//!   (Steele, Lea & Flood, "Fast Splittable Pseudorandom Number Generators",
//!   OOPSLA 2014; the finalizer of Java's `SplittableRandom`)
//! - bounded draw in `[0, n)`: modulo rejection — draw `r`, accept iff
//!   `r < 2^64 - (2^64 mod n)`, return `r % n`
//! - shuffle: Fisher–Yates, `for i in (1..len).rev() { swap(i, bounded(i+1)) }`

/// 64-bit counter-based generator with a fixed, documented algorithm.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, n)` by modulo rejection.
    pub fn bounded(&mut self, n: u64) -> u64 {
        assert!(n > 0, "bounded draw requires n > 0");
        let reject_above = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let r = self.next_u64();
            if r <= reject_above {
                return r % n;
            }
        }
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.bounded(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
