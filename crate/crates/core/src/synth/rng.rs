//! The generator's random source.
//!
//! PCG-XSL-RR 128/64 (O'Neill's PCG64) seeded with `state = seed` and the
//! reference stream constant. Bounded draws are `next_u64() % n`; the bias
//! is irrelevant for corpus generation and the rule is trivial to port, so
//! a seed reproduces the same corpus in any implementation.

use rand_core::Rng;
use rand_pcg::Pcg64;

use crate::model::Txid;

const STREAM: u128 = 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96;

#[derive(Debug, Clone)]
pub struct SynthRng(Pcg64);

impl SynthRng {
    pub fn new(seed: u64) -> Self {
        SynthRng(Pcg64::new(seed as u128, STREAM))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform-ish in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        self.next_u64() % n
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Uniform-ish in `lo..=hi`.
    pub fn between(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }

    /// True with probability `num / den`.
    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }

    /// Four draws, little-endian.
    pub fn txid(&mut self) -> Txid {
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_exact_mut(8) {
            chunk.copy_from_slice(&self.next_u64().to_le_bytes());
        }
        Txid(bytes)
    }

    /// Fisher-Yates, from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}
