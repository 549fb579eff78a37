//! IBM Model 1: EM estimation of lexical translation probabilities and
//! Viterbi word alignment.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::align::{AlignmentMatrix, EmTrace};
use crate::corpus::{Corpus, SentencePair};
use crate::error::{Error, Result};
use crate::vocab::Vocab;

/// Artificial source word that absorbs otherwise unaligned target words.
pub const NULL_TOKEN: &str = "<NULL>";

/// Floor applied to probabilities when writing tables, so downstream lexical
/// weights never hit exact zero.
pub const PROB_FLOOR: f64 = 1e-12;

/// Sentences per parallel work unit. Partial counts are merged in chunk
/// order, which keeps EM bit-identical for any thread count.
const EM_CHUNK: usize = 256;

/// Lexical translation probabilities t(target | source).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TranslationTable {
    source_vocab: Vocab,
    target_vocab: Vocab,
    use_null: bool,
    rows: Vec<BTreeMap<u32, f64>>,
}

impl TranslationTable {
    pub fn from_entries<'a>(
        entries: impl IntoIterator<Item = (&'a str, &'a str, f64)>,
        use_null: bool,
    ) -> Self {
        let mut table = TranslationTable {
            use_null,
            ..TranslationTable::default()
        };
        if use_null {
            table.source_vocab.intern(NULL_TOKEN);
            table.rows.push(BTreeMap::new());
        }
        for (source, target, prob) in entries {
            let s = table.source_vocab.intern(source);
            let t = table.target_vocab.intern(target);
            if table.rows.len() <= s as usize {
                table.rows.resize(s as usize + 1, BTreeMap::new());
            }
            table.rows[s as usize].insert(t, prob);
        }
        table
    }

    pub fn use_null(&self) -> bool {
        self.use_null
    }

    pub fn source_vocab(&self) -> &Vocab {
        &self.source_vocab
    }

    pub fn target_vocab(&self) -> &Vocab {
        &self.target_vocab
    }

    fn prob_ids(&self, s: u32, t: u32) -> f64 {
        self.rows[s as usize].get(&t).copied().unwrap_or(0.0)
    }

    /// t(target | source); 0 for unseen pairs.
    pub fn prob(&self, source: &str, target: &str) -> f64 {
        match (self.source_vocab.get(source), self.target_vocab.get(target)) {
            (Some(s), Some(t)) => self.prob_ids(s, t),
            _ => 0.0,
        }
    }

    /// t(target | NULL); 0 when the table was trained without NULL.
    pub fn prob_null(&self, target: &str) -> f64 {
        if self.use_null {
            self.prob(NULL_TOKEN, target)
        } else {
            0.0
        }
    }

    /// Checks Σ_target t(·|source) = 1 within `tol` for every source word.
    pub fn max_row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .filter(|row| !row.is_empty())
            .map(|row| (row.values().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Entries sorted by source word then target word.
    pub fn sorted_entries(&self) -> Vec<(&str, &str, f64)> {
        let mut entries: Vec<(&str, &str, f64)> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(s, row)| {
                row.iter().map(move |(&t, &p)| {
                    (
                        self.source_vocab.word(s as u32),
                        self.target_vocab.word(t),
                        p,
                    )
                })
            })
            .collect();
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        entries
    }
}

struct EncodedPair {
    source: Vec<u32>,
    target: Vec<u32>,
}

fn encode_corpus(corpus: &Corpus, use_null: bool) -> (Vocab, Vocab, Vec<EncodedPair>) {
    let mut source_vocab = Vocab::new();
    let mut target_vocab = Vocab::new();
    let null_id = use_null.then(|| source_vocab.intern(NULL_TOKEN));
    let pairs = corpus
        .pairs
        .iter()
        .map(|pair| {
            let mut source: Vec<u32> = Vec::with_capacity(pair.source.len() + 1);
            source.extend(null_id);
            source.extend(pair.source.iter().map(|w| source_vocab.intern(w)));
            let target = pair.target.iter().map(|w| target_vocab.intern(w)).collect();
            EncodedPair { source, target }
        })
        .collect();
    (source_vocab, target_vocab, pairs)
}

/// Expected link counts keyed by (source id, target id), plus the chunk's
/// log-likelihood contribution.
type ChunkCounts = (BTreeMap<(u32, u32), f64>, f64);

fn e_step_chunk(chunk: &[EncodedPair], rows: &[BTreeMap<u32, f64>]) -> ChunkCounts {
    let mut counts: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut ll = 0.0;
    for pair in chunk {
        let l = pair.source.len() as f64;
        for &t in &pair.target {
            let denom: f64 = pair
                .source
                .iter()
                .map(|&s| rows[s as usize].get(&t).copied().unwrap_or(0.0))
                .sum();
            ll += denom.ln() - l.ln();
            for &s in &pair.source {
                let p = rows[s as usize].get(&t).copied().unwrap_or(0.0);
                if p > 0.0 {
                    *counts.entry((s, t)).or_insert(0.0) += p / denom;
                }
            }
        }
    }
    (counts, ll)
}

/// Trains IBM Model 1 by EM. The table is initialized uniformly at
/// 1/|target vocabulary| over co-occurring word pairs; each iteration runs a
/// full E and M step and records the corpus log-likelihood under the table
/// the iteration started from.
pub fn train_ibm1(
    corpus: &Corpus,
    iterations: usize,
    use_null: bool,
) -> Result<(TranslationTable, EmTrace)> {
    if corpus.is_empty() {
        return Err(Error::validation("cannot train alignment on an empty corpus"));
    }
    let (source_vocab, target_vocab, pairs) = encode_corpus(corpus, use_null);
    let uniform = 1.0 / target_vocab.len() as f64;

    let mut rows: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); source_vocab.len()];
    for pair in &pairs {
        for &s in &pair.source {
            for &t in &pair.target {
                rows[s as usize].insert(t, uniform);
            }
        }
    }

    let mut trace = EmTrace::default();
    for _ in 0..iterations {
        let partials: Vec<ChunkCounts> = pairs
            .par_chunks(EM_CHUNK)
            .map(|chunk| e_step_chunk(chunk, &rows))
            .collect();

        let mut counts: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        let mut ll = 0.0;
        for (partial, partial_ll) in partials {
            for (key, value) in partial {
                *counts.entry(key).or_insert(0.0) += value;
            }
            ll += partial_ll;
        }
        trace.log_likelihoods.push(ll);

        let mut totals: Vec<f64> = vec![0.0; source_vocab.len()];
        for (&(s, _), &c) in &counts {
            totals[s as usize] += c;
        }
        for row in &mut rows {
            row.clear();
        }
        for ((s, t), c) in counts {
            rows[s as usize].insert(t, c / totals[s as usize]);
        }
    }

    Ok((
        TranslationTable {
            source_vocab,
            target_vocab,
            use_null,
            rows,
        },
        trace,
    ))
}

/// Which side of the pair the table conditions on. For `TargetToSource` the
/// table must come from training on the swapped corpus; emitted links are
/// still `(source index, target index)` of the original pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    SourceToTarget,
    TargetToSource,
}

fn best_link(table: &TranslationTable, conditioning: &[String], generated: &str) -> Option<usize> {
    // NULL competes first, so a real word must beat it strictly; ties among
    // real words keep the lowest index.
    let mut best_prob = table.prob_null(generated);
    let mut best = None;
    for (idx, word) in conditioning.iter().enumerate() {
        let p = table.prob(word, generated);
        if p > best_prob {
            best_prob = p;
            best = Some(idx);
        }
    }
    (best_prob > 0.0).then_some(best).flatten()
}

/// Aligns each generated-side word to its most likely conditioning-side word.
/// Words won by NULL (including OOVs) produce no link.
pub fn viterbi_align(
    pair: &SentencePair,
    table: &TranslationTable,
    direction: Direction,
) -> AlignmentMatrix {
    let mut matrix = AlignmentMatrix::new(pair.source.len(), pair.target.len());
    match direction {
        Direction::SourceToTarget => {
            for (j, word) in pair.target.iter().enumerate() {
                if let Some(i) = best_link(table, &pair.source, word) {
                    matrix.insert(i, j).expect("link within pair bounds");
                }
            }
        }
        Direction::TargetToSource => {
            for (i, word) in pair.source.iter().enumerate() {
                if let Some(j) = best_link(table, &pair.target, word) {
                    matrix.insert(i, j).expect("link within pair bounds");
                }
            }
        }
    }
    matrix
}

/// Writes `source<TAB>target<TAB>probability` lines sorted by word pair,
/// flooring probabilities at [`PROB_FLOOR`].
pub fn write_ttable(path: &Path, table: &TranslationTable) -> Result<()> {
    let mut out = Vec::new();
    for (source, target, prob) in table.sorted_entries() {
        writeln!(out, "{source}\t{target}\t{}", prob.max(PROB_FLOOR)).expect("write to vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_ttable(path: &Path) -> Result<TranslationTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let origin = path.display().to_string();
    let mut entries = Vec::new();
    let mut saw_null = false;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let entry = (|| {
            let source = fields.next()?;
            let target = fields.next()?;
            let prob: f64 = fields.next()?.parse().ok()?;
            if fields.next().is_some() || prob.is_nan() || prob < 0.0 {
                return None;
            }
            Some((source, target, prob))
        })();
        let (source, target, prob) = entry.ok_or_else(|| {
            Error::parse(&origin, idx + 1, "expected `source<TAB>target<TAB>probability`")
        })?;
        saw_null |= source == NULL_TOKEN;
        entries.push((source.to_string(), target.to_string(), prob));
    }
    Ok(TranslationTable::from_entries(
        entries.iter().map(|(s, t, p)| (s.as_str(), t.as_str(), *p)),
        saw_null,
    ))
}
