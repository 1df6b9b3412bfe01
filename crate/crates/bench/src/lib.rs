//! Shared workloads for the benchmarks.

use bsqlens_core::{generate, serialize_corpus, Corpus, SynthConfig};

/// Participants scale with the corpus so wallets stay small.
pub fn synthetic_corpus(tx_count: usize, seed: u64) -> Corpus {
    let config = SynthConfig {
        participants: (tx_count / 30).clamp(10, 2000),
        tx_count,
        seed,
        ..SynthConfig::default()
    };
    generate(&config).expect("feasible config").corpus
}

pub fn corpus_jsonl(corpus: &Corpus) -> Vec<u8> {
    let mut buf = Vec::new();
    serialize_corpus(corpus, &mut buf).expect("in-memory write");
    buf
}

/// Pseudo-random union pairs over `n` elements, from a 64-bit LCG.
pub fn union_pairs(n: u32, count: usize, seed: u64) -> Vec<(u32, u32)> {
    let mut state = seed;
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) % n as u64) as u32
    };
    (0..count).map(|_| (next(), next())).collect()
}
