//! IBM Model 2: adds positional alignment probabilities a(i | j, l, m) on
//! top of the Model 1 lexical table. Used as an optional refinement stage,
//! initialized from a trained Model 1 table.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::align::ibm1::{TranslationTable, NULL_TOKEN};
use crate::align::{AlignmentMatrix, Direction, EmTrace};
use crate::corpus::{Corpus, SentencePair};
use crate::error::{Error, Result};
use crate::vocab::Vocab;

const EM_CHUNK: usize = 256;

/// Lexical table plus positional alignment probabilities keyed by sentence
/// shape. Source positions include NULL at index 0 when the table uses it.
#[derive(Debug, Clone)]
pub struct Ibm2Model {
    pub table: TranslationTable,
    align: HashMap<(u32, u32), Vec<f64>>,
}

impl Ibm2Model {
    pub fn from_parts(
        table: TranslationTable,
        align: impl IntoIterator<Item = ((usize, usize), Vec<f64>)>,
    ) -> Self {
        Ibm2Model {
            table,
            align: align
                .into_iter()
                .map(|((l, m), probs)| {
                    debug_assert_eq!(probs.len(), l * m);
                    ((l as u32, m as u32), probs)
                })
                .collect(),
        }
    }

    /// a(i | j, l, m) for an encoded source of length `l` (NULL included).
    /// Unseen sentence shapes fall back to uniform.
    pub fn alignment_prob(&self, l: usize, m: usize, i: usize, j: usize) -> f64 {
        match self.align.get(&(l as u32, m as u32)) {
            Some(probs) => probs[j * l + i],
            None => 1.0 / l as f64,
        }
    }

    /// Largest deviation of Σ_i a(i|j,l,m) from 1 across all stored shapes.
    pub fn max_alignment_sum_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (&(l, _), probs) in &self.align {
            for row in probs.chunks(l as usize) {
                worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
            }
        }
        worst
    }
}

struct EncodedPair {
    source: Vec<u32>,
    target: Vec<u32>,
}

struct ChunkCounts {
    t_counts: BTreeMap<(u32, u32), f64>,
    a_counts: HashMap<(u32, u32), Vec<f64>>,
    ll: f64,
}

fn e_step_chunk(chunk: &[EncodedPair], rows: &[BTreeMap<u32, f64>], model: &Ibm2Model) -> ChunkCounts {
    let mut out = ChunkCounts {
        t_counts: BTreeMap::new(),
        a_counts: HashMap::new(),
        ll: 0.0,
    };
    for pair in chunk {
        let l = pair.source.len();
        let m = pair.target.len();
        let a_row = out
            .a_counts
            .entry((l as u32, m as u32))
            .or_insert_with(|| vec![0.0; l * m]);
        for (j, &t) in pair.target.iter().enumerate() {
            let denom: f64 = pair
                .source
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    rows[s as usize].get(&t).copied().unwrap_or(0.0)
                        * model.alignment_prob(l, m, i, j)
                })
                .sum();
            out.ll += denom.ln();
            for (i, &s) in pair.source.iter().enumerate() {
                let p = rows[s as usize].get(&t).copied().unwrap_or(0.0)
                    * model.alignment_prob(l, m, i, j);
                if p > 0.0 {
                    let post = p / denom;
                    *out.t_counts.entry((s, t)).or_insert(0.0) += post;
                    a_row[j * l + i] += post;
                }
            }
        }
    }
    out
}

/// Trains IBM Model 2 by EM, starting from a Model 1 lexical table and
/// uniform positional probabilities.
pub fn train_ibm2(
    corpus: &Corpus,
    iterations: usize,
    init: &TranslationTable,
) -> Result<(Ibm2Model, EmTrace)> {
    if corpus.is_empty() {
        return Err(Error::validation("cannot train alignment on an empty corpus"));
    }
    let use_null = init.use_null();
    let mut source_vocab = Vocab::new();
    let mut target_vocab = Vocab::new();
    let null_id = use_null.then(|| source_vocab.intern(NULL_TOKEN));
    let pairs: Vec<EncodedPair> = corpus
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

    // Seed lexical rows from the Model 1 table; co-occurring pairs the table
    // does not know get the uniform fallback so they stay reachable.
    let uniform = 1.0 / target_vocab.len() as f64;
    let mut rows: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); source_vocab.len()];
    for pair in &pairs {
        for &s in &pair.source {
            for &t in &pair.target {
                let p = init.prob(source_vocab.word(s), target_vocab.word(t));
                rows[s as usize].insert(t, if p > 0.0 { p } else { uniform });
            }
        }
    }

    let mut model = Ibm2Model {
        table: TranslationTable::default(),
        align: HashMap::new(),
    };
    let mut trace = EmTrace::default();
    for _ in 0..iterations {
        let partials: Vec<ChunkCounts> = pairs
            .par_chunks(EM_CHUNK)
            .map(|chunk| e_step_chunk(chunk, &rows, &model))
            .collect();

        let mut t_counts: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        let mut a_counts: HashMap<(u32, u32), Vec<f64>> = HashMap::new();
        let mut ll = 0.0;
        for partial in partials {
            for (key, value) in partial.t_counts {
                *t_counts.entry(key).or_insert(0.0) += value;
            }
            for (shape, values) in partial.a_counts {
                let acc = a_counts
                    .entry(shape)
                    .or_insert_with(|| vec![0.0; values.len()]);
                for (slot, v) in acc.iter_mut().zip(values) {
                    *slot += v;
                }
            }
            ll += partial.ll;
        }
        trace.log_likelihoods.push(ll);

        let mut totals: Vec<f64> = vec![0.0; source_vocab.len()];
        for (&(s, _), &c) in &t_counts {
            totals[s as usize] += c;
        }
        for row in &mut rows {
            row.clear();
        }
        for ((s, t), c) in t_counts {
            rows[s as usize].insert(t, c / totals[s as usize]);
        }

        for ((l, m), counts) in &mut a_counts {
            let l = *l as usize;
            for j in 0..*m as usize {
                let row = &mut counts[j * l..(j + 1) * l];
                let total: f64 = row.iter().sum();
                if total > 0.0 {
                    for v in row {
                        *v /= total;
                    }
                }
            }
        }
        model.align = a_counts;
    }

    let entries: Vec<(String, String, f64)> = rows
        .iter()
        .enumerate()
        .flat_map(|(s, row)| {
            row.iter().map(move |(&t, &p)| (s as u32, t, p))
        })
        .map(|(s, t, p)| {
            (
                source_vocab.word(s).to_string(),
                target_vocab.word(t).to_string(),
                p,
            )
        })
        .collect();
    model.table = TranslationTable::from_entries(
        entries.iter().map(|(s, t, p)| (s.as_str(), t.as_str(), *p)),
        use_null,
    );
    Ok((model, trace))
}

fn best_link_ibm2(
    model: &Ibm2Model,
    conditioning: &[String],
    generated: &str,
    j: usize,
    m: usize,
) -> Option<usize> {
    let use_null = model.table.use_null();
    let l = conditioning.len() + use_null as usize;
    let mut best_prob = if use_null {
        model.table.prob_null(generated) * model.alignment_prob(l, m, 0, j)
    } else {
        0.0
    };
    let mut best = None;
    for (idx, word) in conditioning.iter().enumerate() {
        let pos = idx + use_null as usize;
        let p = model.table.prob(word, generated) * model.alignment_prob(l, m, pos, j);
        if p > best_prob {
            best_prob = p;
            best = Some(idx);
        }
    }
    (best_prob > 0.0).then_some(best).flatten()
}

/// Model 2 Viterbi alignment: argmax over t(word|cond) · a(i|j,l,m), with the
/// same NULL and tie conventions as Model 1.
pub fn viterbi_align_ibm2(
    pair: &SentencePair,
    model: &Ibm2Model,
    direction: Direction,
) -> AlignmentMatrix {
    let mut matrix = AlignmentMatrix::new(pair.source.len(), pair.target.len());
    match direction {
        Direction::SourceToTarget => {
            let m = pair.target.len();
            for (j, word) in pair.target.iter().enumerate() {
                if let Some(i) = best_link_ibm2(model, &pair.source, word, j, m) {
                    matrix.insert(i, j).expect("link within pair bounds");
                }
            }
        }
        Direction::TargetToSource => {
            let m = pair.source.len();
            for (i, word) in pair.source.iter().enumerate() {
                if let Some(j) = best_link_ibm2(model, &pair.target, word, i, m) {
                    matrix.insert(i, j).expect("link within pair bounds");
                }
            }
        }
    }
    matrix
}
