//! Phrase-based statistical machine translation toolkit.
//!
//! The crate covers the full classic SMT pipeline on pre-tokenized parallel
//! text:
//!
//! * [`corpus`] — cleaning, deduplication, similarity filtering, length
//!   analysis, romanization, source inversion, BPE subwords, corpus splits.
//! * [`align`] — IBM Model 1 (and optional Model 2) EM training, Viterbi
//!   word alignment, bidirectional symmetrization.
//! * [`phrase`] — consistency-criterion phrase extraction and four-feature
//!   phrase table scoring.
//! * [`lm`] — interpolated Kneser-Ney n-gram language models with ARPA
//!   serialization.
//! * [`decoder`] — log-linear stack decoding with coverage bitsets,
//!   distortion, future-cost estimation, n-best lists and MERT-style weight
//!   tuning.
//! * [`eval`] — corpus BLEU, k-fold cross-validation and the three-variant
//!   experiment harness (baseline / romanized / inverted).
//!
//! All randomness is seeded; every training and decoding routine is
//! deterministic given identical inputs and seeds.

pub mod align;
pub mod config;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod lm;
pub mod phrase;
pub mod toy;
pub mod vocab;

pub use error::{Error, Result};
