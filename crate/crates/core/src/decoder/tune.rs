//! Weight tuning: n-best re-decoding plus coordinate line search.
//!
//! Each outer iteration decodes the tune set, merges the n-best lists into a
//! growing pool, and runs an exact line search per feature over the pool
//! (the upper envelope of per-sentence score lines, swept over its
//! breakpoints with incremental BLEU statistics). Random restarts guard
//! against bad local optima; everything is seeded, so tuning is
//! deterministic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decoder::{nbest, DecoderParams, FeatureVector, FeatureWeights, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::eval::{sentence_stats, BleuStats};
use crate::lm::NGramModel;
use crate::phrase::PhraseTable;

const TUNE_NBEST: usize = 100;
const RESTARTS: usize = 5;
const MAX_PASSES: usize = 20;
const TUNE_SEED: u64 = 310;
const MIN_GAIN: f64 = 1e-9;

struct PoolEntry {
    features: FeatureVector,
    stats: BleuStats,
}

/// Per-sentence candidate pools merged across tuning iterations.
struct Pool {
    sentences: Vec<Vec<PoolEntry>>,
    seen: Vec<std::collections::HashSet<String>>,
}

impl Pool {
    fn new(size: usize) -> Self {
        Pool {
            sentences: (0..size).map(|_| Vec::new()).collect(),
            seen: (0..size).map(|_| Default::default()).collect(),
        }
    }

    fn insert(&mut self, sentence: usize, features: FeatureVector, stats: BleuStats) {
        let key = features.map(|f| f.to_bits().to_string()).join(",");
        if self.seen[sentence].insert(key) {
            self.sentences[sentence].push(PoolEntry { features, stats });
        }
    }

    /// Corpus BLEU of the per-sentence argmax selections under `weights`.
    fn bleu(&self, weights: &FeatureWeights) -> f64 {
        let mut total = BleuStats::default();
        for entries in &self.sentences {
            let best = entries
                .iter()
                .map(|e| weights.dot(&e.features))
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|(idx, _)| idx)
                .expect("pool sentences are non-empty");
            total += entries[best].stats;
        }
        total.score()
    }
}

/// One line `y = offset + slope * gamma` of a candidate's score as the tuned
/// feature's weight varies.
#[derive(Clone, Copy)]
struct Line {
    offset: f64,
    slope: f64,
    entry: usize,
}

fn intersect(a: &Line, b: &Line) -> f64 {
    (a.offset - b.offset) / (b.slope - a.slope)
}

/// Upper envelope: the entries selected as gamma sweeps left to right, with
/// the breakpoints where the selection changes.
fn upper_envelope(mut lines: Vec<Line>) -> (usize, Vec<(f64, usize)>) {
    lines.sort_by(|a, b| {
        a.slope
            .total_cmp(&b.slope)
            .then(a.offset.total_cmp(&b.offset))
    });
    lines.dedup_by(|next, kept| {
        if next.slope == kept.slope {
            // Same slope: the later (higher-offset) line dominates.
            *kept = *next;
            true
        } else {
            false
        }
    });
    let mut hull: Vec<Line> = Vec::new();
    let mut starts: Vec<f64> = Vec::new();
    for line in lines {
        loop {
            match hull.last() {
                None => {
                    hull.push(line);
                    starts.push(f64::NEG_INFINITY);
                    break;
                }
                Some(top) => {
                    let x = intersect(top, &line);
                    if x <= *starts.last().expect("starts parallel hull") && hull.len() > 1 {
                        hull.pop();
                        starts.pop();
                    } else {
                        hull.push(line);
                        starts.push(x);
                        break;
                    }
                }
            }
        }
    }
    let first = hull[0].entry;
    let transitions = hull[1..]
        .iter()
        .zip(&starts[1..])
        .map(|(line, &x)| (x, line.entry))
        .collect();
    (first, transitions)
}

/// Exact line search over one feature. Returns the best (weight, BLEU) if
/// any selection change exists along the axis.
fn line_search(pool: &Pool, weights: &FeatureWeights, feature: usize) -> Option<(f64, f64)> {
    let mut total = BleuStats::default();
    // For each sentence: its currently selected entry and the gamma-ordered
    // switches (gamma, sentence, from-entry, to-entry).
    let mut current: Vec<usize> = Vec::with_capacity(pool.sentences.len());
    let mut switches: Vec<(f64, usize, usize)> = Vec::new();
    for (sentence, entries) in pool.sentences.iter().enumerate() {
        let lines: Vec<Line> = entries
            .iter()
            .enumerate()
            .map(|(idx, e)| {
                let slope = e.features[feature];
                Line {
                    offset: weights.dot(&e.features) - weights.0[feature] * slope,
                    slope,
                    entry: idx,
                }
            })
            .collect();
        let (first, transitions) = upper_envelope(lines);
        total += entries[first].stats;
        current.push(first);
        for (gamma, entry) in transitions {
            switches.push((gamma, sentence, entry));
        }
    }
    if switches.is_empty() {
        return None;
    }
    switches.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut best_bleu = total.score();
    let mut best_gamma = switches[0].0 - 1.0;
    let mut idx = 0;
    while idx < switches.len() {
        let gamma = switches[idx].0;
        while idx < switches.len() && switches[idx].0 == gamma {
            let (_, sentence, entry) = switches[idx];
            total -= pool.sentences[sentence][current[sentence]].stats;
            total += pool.sentences[sentence][entry].stats;
            current[sentence] = entry;
            idx += 1;
        }
        let candidate = if idx < switches.len() {
            (gamma + switches[idx].0) / 2.0
        } else {
            gamma + 1.0
        };
        let bleu = total.score();
        if bleu > best_bleu + MIN_GAIN {
            best_bleu = bleu;
            best_gamma = candidate;
        }
    }
    Some((best_gamma, best_bleu))
}

/// Coordinate ascent from `start` until no feature improves pool BLEU.
fn optimize(pool: &Pool, start: FeatureWeights) -> FeatureWeights {
    let mut weights = start;
    let mut bleu = pool.bleu(&weights);
    for _ in 0..MAX_PASSES {
        let mut improved = false;
        for feature in 0..FEATURE_COUNT {
            if let Some((gamma, candidate)) = line_search(pool, &weights, feature) {
                if candidate > bleu + MIN_GAIN {
                    weights.0[feature] = gamma;
                    bleu = candidate;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    weights
}

/// Tunes feature weights on a held-out set of (source, reference) pairs.
/// Returns weights whose selection BLEU on the merged n-best pool is at
/// least that of `initial`; when nothing improves, `initial` comes back
/// unchanged.
pub fn tune_weights(
    tune_set: &[(Vec<String>, Vec<String>)],
    ptable: &PhraseTable,
    lm: &NGramModel,
    params: &DecoderParams,
    initial: FeatureWeights,
    iterations: usize,
) -> Result<FeatureWeights> {
    if tune_set.is_empty() {
        return Err(Error::Tuning("tune set is empty".into()));
    }
    initial.validate()?;
    let mut pool = Pool::new(tune_set.len());
    let mut current = initial;
    for iteration in 0..iterations {
        let mut failures = 0usize;
        for (sentence, (source, reference)) in tune_set.iter().enumerate() {
            match nbest(source, ptable, lm, &current, params, TUNE_NBEST) {
                Ok(entries) => {
                    for entry in entries {
                        let stats = sentence_stats(&entry.translation, reference);
                        pool.insert(sentence, entry.features, stats);
                    }
                }
                Err(Error::DecodeFailure { .. }) => failures += 1,
                Err(other) => return Err(other),
            }
        }
        if failures * 2 > tune_set.len() {
            return Err(Error::Tuning(format!(
                "decode failed on {failures} of {} tune sentences",
                tune_set.len()
            )));
        }
        if pool.sentences.iter().any(Vec::is_empty) {
            return Err(Error::Tuning(
                "some tune sentences produced no candidates".into(),
            ));
        }

        let current_bleu = pool.bleu(&current);
        let mut best = current;
        let mut best_bleu = current_bleu;
        for restart in 0..RESTARTS {
            let start = if restart == 0 {
                current
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    TUNE_SEED + (iteration * RESTARTS + restart) as u64,
                );
                FeatureWeights(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
            };
            let candidate = optimize(&pool, start);
            let bleu = pool.bleu(&candidate);
            if bleu > best_bleu + MIN_GAIN {
                best = candidate;
                best_bleu = bleu;
            }
        }
        if best_bleu <= current_bleu + MIN_GAIN {
            break;
        }
        current = best;
    }
    // The returned weights must never fall below the starting point on the
    // merged pool.
    if pool.bleu(&current) < pool.bleu(&initial) {
        current = initial;
    }
    Ok(current)
}
