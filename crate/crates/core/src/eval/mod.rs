//! Corpus BLEU, k-fold cross-validation, and the experiment harness.

mod experiment;

pub use experiment::{
    decode_corpus, run_experiment, train_models, ExperimentConfig, ExperimentResult, FoldModels,
    Variant,
};

use std::collections::HashMap;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const BLEU_MAX_ORDER: usize = 4;

/// Sufficient statistics for corpus BLEU. Additive, so sentence-level stats
/// can be pooled, swapped in and out during tuning, and reduced in parallel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; BLEU_MAX_ORDER],
    pub totals: [u64; BLEU_MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl Add for BleuStats {
    type Output = BleuStats;
    fn add(mut self, rhs: BleuStats) -> BleuStats {
        self += rhs;
        self
    }
}

impl AddAssign for BleuStats {
    fn add_assign(&mut self, rhs: BleuStats) {
        for n in 0..BLEU_MAX_ORDER {
            self.matches[n] += rhs.matches[n];
            self.totals[n] += rhs.totals[n];
        }
        self.hyp_len += rhs.hyp_len;
        self.ref_len += rhs.ref_len;
    }
}

impl Sub for BleuStats {
    type Output = BleuStats;
    fn sub(mut self, rhs: BleuStats) -> BleuStats {
        self -= rhs;
        self
    }
}

impl SubAssign for BleuStats {
    fn sub_assign(&mut self, rhs: BleuStats) {
        for n in 0..BLEU_MAX_ORDER {
            self.matches[n] -= rhs.matches[n];
            self.totals[n] -= rhs.totals[n];
        }
        self.hyp_len -= rhs.hyp_len;
        self.ref_len -= rhs.ref_len;
    }
}

/// Clipped n-gram match statistics for one hypothesis/reference pair.
pub fn sentence_stats(hypothesis: &[String], reference: &[String]) -> BleuStats {
    let mut stats = BleuStats {
        hyp_len: hypothesis.len() as u64,
        ref_len: reference.len() as u64,
        ..BleuStats::default()
    };
    for n in 1..=BLEU_MAX_ORDER {
        if hypothesis.len() < n {
            break;
        }
        let mut ref_counts: HashMap<&[String], u64> = HashMap::new();
        for window in reference.windows(n) {
            *ref_counts.entry(window).or_insert(0) += 1;
        }
        let mut hyp_counts: HashMap<&[String], u64> = HashMap::new();
        for window in hypothesis.windows(n) {
            *hyp_counts.entry(window).or_insert(0) += 1;
        }
        stats.totals[n - 1] = (hypothesis.len() - n + 1) as u64;
        stats.matches[n - 1] = hyp_counts
            .iter()
            .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
    }
    stats
}

/// BLEU on the 0-100 scale with its components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BleuReport {
    /// Raw modified precisions; 0 when no n-grams of that order exist.
    pub precisions: [f64; BLEU_MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
    pub bleu: f64,
}

impl BleuStats {
    /// Corpus BLEU. Orders with no hypothesis n-grams at all are skipped
    /// (so identical corpora always score 100 regardless of length); a zero
    /// precision at a used order is floored at 1/(2 * hypothesis length).
    pub fn report(&self) -> BleuReport {
        let mut precisions = [0.0; BLEU_MAX_ORDER];
        if self.hyp_len == 0 {
            return BleuReport {
                precisions,
                brevity_penalty: 0.0,
                hyp_len: 0,
                ref_len: self.ref_len,
                bleu: 0.0,
            };
        }
        let floor = 1.0 / (2.0 * self.hyp_len as f64);
        let mut log_sum = 0.0;
        let mut used = 0usize;
        for (n, precision) in precisions.iter_mut().enumerate() {
            if self.totals[n] == 0 {
                continue;
            }
            *precision = self.matches[n] as f64 / self.totals[n] as f64;
            let smoothed = if *precision > 0.0 { *precision } else { floor };
            log_sum += smoothed.ln();
            used += 1;
        }
        let brevity_penalty = if self.hyp_len < self.ref_len {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        } else {
            1.0
        };
        BleuReport {
            precisions,
            brevity_penalty,
            hyp_len: self.hyp_len,
            ref_len: self.ref_len,
            bleu: 100.0 * brevity_penalty * (log_sum / used as f64).exp(),
        }
    }

    pub fn score(&self) -> f64 {
        self.report().bleu
    }
}

/// Pools sentence statistics over a corpus.
pub fn corpus_stats(hypotheses: &[Vec<String>], references: &[Vec<String>]) -> Result<BleuStats> {
    if hypotheses.len() != references.len() {
        return Err(Error::validation(format!(
            "{} hypotheses but {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    if hypotheses.is_empty() {
        return Err(Error::validation("cannot score an empty corpus"));
    }
    let mut stats = BleuStats::default();
    for (hyp, refr) in hypotheses.iter().zip(references) {
        stats += sentence_stats(hyp, refr);
    }
    Ok(stats)
}

/// Corpus BLEU with brevity penalty and clipping.
pub fn bleu(hypotheses: &[Vec<String>], references: &[Vec<String>]) -> Result<BleuReport> {
    Ok(corpus_stats(hypotheses, references)?.report())
}

/// Arithmetic mean.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Splits `0..size` into `k` disjoint (train, test) partitions. Test folds
/// cover every index once, sizes differing by at most one; both halves come
/// out sorted. Deterministic in `seed`.
pub fn kfold(size: usize, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::validation(format!("k must be at least 2, got {k}")));
    }
    if k > size {
        return Err(Error::validation(format!(
            "cannot split {size} items into {k} folds"
        )));
    }
    let mut indices: Vec<usize> = (0..size).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let base = size / k;
    let extra = size % k;
    let mut folds = Vec::with_capacity(k);
    let mut offset = 0;
    for fold in 0..k {
        let len = base + usize::from(fold < extra);
        let mut test: Vec<usize> = indices[offset..offset + len].to_vec();
        let mut train: Vec<usize> = indices[..offset]
            .iter()
            .chain(&indices[offset + len..])
            .copied()
            .collect();
        test.sort_unstable();
        train.sort_unstable();
        folds.push((train, test));
        offset += len;
    }
    Ok(folds)
}

/// `kfold` over a corpus, materializing the sub-corpora.
pub fn kfold_corpora(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<(Corpus, Corpus)>> {
    Ok(kfold(corpus.len(), k, seed)?
        .into_iter()
        .map(|(train, test)| (corpus.select(&train), corpus.select(&test)))
        .collect())
}
