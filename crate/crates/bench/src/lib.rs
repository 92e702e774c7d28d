//! Fixtures shared by the benchmarks.

use ppsmc::music::{train_ngram, NGramModel, Symbol, Vocabulary};
use ppsmc::ConstraintSet;

/// Evenly spaced constraints in (0, 1) that allow free events everywhere.
pub fn spaced_constraints(n: usize) -> ConstraintSet {
    let z = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
    ConstraintSet::allowing_all(z).expect("spaced constraints are valid")
}

/// A trigram model on the full MIDI action set trained on a scale pattern.
pub fn scale_model(s_max: u32) -> NGramModel {
    let vocab = Vocabulary::midi(1, s_max).expect("valid vocabulary");
    let mut seq = Vec::new();
    for (i, pitch) in [60u32, 62, 64, 65, 67, 69, 71, 72]
        .iter()
        .cycle()
        .take(64)
        .enumerate()
    {
        if i > 0 {
            seq.push(Symbol::Action(pitch + 128 - 2));
            seq.push(Symbol::Shift(4));
        }
        seq.push(Symbol::Action(pitch + 1));
    }
    train_ngram(vocab, &[seq], 3, 0.01).expect("non-empty corpus")
}
