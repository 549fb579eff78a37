//! Synthetic dictionary-substitution language pair.
//!
//! Source words carry one of two Arabic-script diacritics; target words are
//! plain indexed forms. The mapping is bijective and order-preserving, so a
//! correctly trained pipeline can translate held-out sentences exactly,
//! while stripping the diacritics (a lossy romanization) collapses word
//! pairs and inverting the source breaks monotone decoding. That makes the
//! pair a controlled probe for the experiment harness.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, SentencePair, TransliterationTable};

/// U+064F (damma) and U+0650 (kasra), the two diacritics distinguishing
/// otherwise identical source forms.
pub const TOY_DIACRITICS: [char; 2] = ['\u{064F}', '\u{0650}'];

const MIN_LEN: usize = 3;
const MAX_LEN: usize = 12;

/// Source form of word `i`: a shared base plus a diacritic, so ids `2k` and
/// `2k+1` differ only in the diacritic.
pub fn toy_source_word(i: usize) -> String {
    format!("g{}{}", i / 2, TOY_DIACRITICS[i % 2])
}

/// Target form of word `i`.
pub fn toy_target_word(i: usize) -> String {
    format!("t{i}")
}

/// A seeded parallel corpus over `vocab` word pairs; sentence lengths are
/// drawn uniformly from 3..=12 and tokens uniformly from the vocabulary.
pub fn toy_corpus(sentences: usize, vocab: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..sentences)
        .map(|_| {
            let len = rng.gen_range(MIN_LEN..=MAX_LEN);
            let words: Vec<usize> = (0..len).map(|_| rng.gen_range(0..vocab)).collect();
            SentencePair::new(
                words.iter().map(|&w| toy_source_word(w)).collect(),
                words.iter().map(|&w| toy_target_word(w)).collect(),
            )
        })
        .collect();
    let mut corpus = Corpus::new(pairs);
    corpus.source_lang = "toy-src".into();
    corpus.target_lang = "toy-tgt".into();
    corpus
}

/// The lossy romanization: both diacritics map to nothing, so the two
/// source forms of each base collapse into one.
pub fn toy_translit_table() -> TransliterationTable {
    TransliterationTable::new(
        TOY_DIACRITICS
            .iter()
            .map(|&d| (d.to_string(), String::new())),
    )
}
