//! Counter-based splittable random streams.
//!
//! Every stream is a pure function of its key; keys are derived by absorbing
//! a list of 64-bit words (seed, chain index, step index, ...). Two streams
//! with different key words never share state, so running chains in parallel
//! or reordering work cannot change the output of a computation.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: bijective, good avalanche (Vigna).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A counter-based generator: output `n` is `mix64(key + n*gamma)`, the
/// SplitMix64 sequence for this key.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    /// Stream keyed by a single seed.
    pub fn new(seed: u64) -> Self {
        CounterRng {
            key: mix64(seed),
            counter: 0,
        }
    }

    /// Stream keyed by a word sequence, e.g. `(master_seed, chain, step)`.
    pub fn keyed(words: &[u64]) -> Self {
        let mut key = 0x243F_6A88_85A3_08D3; // pi digits, arbitrary nonzero start
        for &w in words {
            key = mix64(key ^ w.wrapping_mul(GOLDEN_GAMMA).wrapping_add(GOLDEN_GAMMA));
        }
        CounterRng { key, counter: 0 }
    }

    /// Derive the `index`-th child stream; children with distinct indices are
    /// statistically independent of each other and of the parent.
    pub fn split(&self, index: u64) -> Self {
        CounterRng {
            key: mix64(self.key ^ (index.wrapping_add(1)).wrapping_mul(GOLDEN_GAMMA)),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64_value(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        const DEN: f64 = (1u64 << 53) as f64;
        ((self.next_u64_value() >> 11) as f64) / DEN
    }

    /// Uniform index in [0, n).
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // 53-bit uniform scaled; bias is negligible for n << 2^53.
        (self.next_f64() * n as f64) as usize % n
    }

    /// Standard normal via `rand_distr`'s ziggurat.
    #[inline]
    pub fn next_standard_normal(&mut self) -> f64 {
        use rand_distr::StandardNormal;
        <StandardNormal as rand_distr::Distribution<f64>>::sample(&StandardNormal, self)
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64_value() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.next_u64_value()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let v = self.next_u64_value().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_sequence() {
        let mut a = CounterRng::keyed(&[7, 3, 11]);
        let mut b = CounterRng::keyed(&[7, 3, 11]);
        for _ in 0..32 {
            assert_eq!(a.next_u64_value(), b.next_u64_value());
        }
    }

    #[test]
    fn distinct_keys_distinct_streams() {
        let mut a = CounterRng::keyed(&[7, 3, 11]);
        let mut b = CounterRng::keyed(&[7, 3, 12]);
        let same = (0..64).filter(|_| a.next_u64_value() == b.next_u64_value()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn split_independent_of_parent_consumption() {
        let parent = CounterRng::keyed(&[1]);
        let mut consumed = parent.clone();
        for _ in 0..100 {
            consumed.next_u64_value();
        }
        let mut c1 = parent.split(4);
        let mut c2 = consumed.split(4);
        assert_eq!(c1.next_u64_value(), c2.next_u64_value());
    }

    #[test]
    fn normal_moments_sane() {
        let mut r = CounterRng::new(42);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z = r.next_standard_normal();
            s += z;
            s2 += z * z;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
