//! Synthetic inputs for the benchmarks.

use emoxling_core::{LabelVector, NUM_LABELS};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CUES: [&str; NUM_LABELS] = [
    "غاضب", "منتظر", "مقرف", "خائف", "سعيد", "أحب", "متفائل", "يائس", "حزين", "مندهش", "ثقة",
];
const FILLER: [&str; 12] = [
    "في", "اليوم", "جدا", "الناس", "هذا", "مع", "كل", "مباراة", "بعد", "قبل", "الله", "الحياة",
];

/// `n` tweet-like texts with one to three emotions each; cue words carry
/// the labels and filler pads each text to 8..20 words.
pub fn corpus(n: usize, seed: u64) -> (Vec<String>, Vec<LabelVector>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut labels = LabelVector::empty();
            let k = rng.random_range(1..=3);
            while labels.count() < k {
                labels.set_index(rng.random_range(0..NUM_LABELS), true);
            }
            let len = rng.random_range(8..20);
            let mut words: Vec<&str> = (0..len).map(|_| *FILLER.choose(&mut rng).unwrap()).collect();
            for l in labels.labels() {
                let at = rng.random_range(0..=words.len());
                words.insert(at, CUES[l.index()]);
            }
            (words.join(" "), labels)
        })
        .unzip()
}

/// Independent random label vectors, each bit set with probability 0.3.
pub fn label_vectors(n: usize, seed: u64) -> Vec<LabelVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut v = LabelVector::empty();
            for k in 0..NUM_LABELS {
                v.set_index(k, rng.random_bool(0.3));
            }
            v
        })
        .collect()
}
