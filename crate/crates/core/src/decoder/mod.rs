//! Log-linear phrase-based stack decoding.
//!
//! Hypotheses live in per-coverage-count stacks and are pruned by histogram
//! size and a beam threshold on score plus an admissible future-cost
//! estimate, so exhaustive settings (huge stack, threshold off) reproduce
//! brute-force search. Scores are log10 throughout, matching the LM.

mod tune;

pub use tune::tune_weights;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lm::NGramModel;
use crate::phrase::PhraseTable;

pub const FEATURE_COUNT: usize = 8;
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "phrase_fwd",
    "lex_fwd",
    "phrase_rev",
    "lex_rev",
    "lm",
    "word_penalty",
    "phrase_penalty",
    "distortion",
];

const F_PHRASE_FWD: usize = 0;
const F_LM: usize = 4;
const F_WORD_PENALTY: usize = 5;
const F_PHRASE_PENALTY: usize = 6;
const F_DISTORTION: usize = 7;

/// Accumulated per-feature values of a derivation, in log10 space where the
/// underlying model is probabilistic.
pub type FeatureVector = [f64; FEATURE_COUNT];

/// Log-linear weights, one per feature in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureWeights(pub [f64; FEATURE_COUNT]);

impl Default for FeatureWeights {
    fn default() -> Self {
        let mut w = [1.0; FEATURE_COUNT];
        w[F_WORD_PENALTY] = 0.0;
        FeatureWeights(w)
    }
}

impl FeatureWeights {
    pub fn dot(&self, features: &FeatureVector) -> f64 {
        self.0.iter().zip(features).map(|(w, f)| w * f).sum()
    }

    pub fn scaled(&self, factor: f64) -> FeatureWeights {
        FeatureWeights(self.0.map(|w| w * factor))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in FEATURE_NAMES.iter().zip(&self.0) {
            if !w.is_finite() {
                return Err(Error::validation(format!("weight {name} is not finite: {w}")));
            }
        }
        Ok(())
    }

    /// Writes `feature-name = value` lines in canonical feature order.
    pub fn to_file(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (name, w) in FEATURE_NAMES.iter().zip(&self.0) {
            writeln!(out, "{name} = {w}").expect("write to string");
        }
        fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Reads a weights file; listed features override the defaults.
    pub fn from_file(path: &Path) -> Result<FeatureWeights> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let origin = path.display().to_string();
        let mut weights = FeatureWeights::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(&origin, idx + 1, "expected `feature-name = value`"))?;
            let slot = FEATURE_NAMES
                .iter()
                .position(|n| *n == name.trim())
                .ok_or_else(|| {
                    Error::parse(&origin, idx + 1, format!("unknown feature {:?}", name.trim()))
                })?;
            weights.0[slot] = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(&origin, idx + 1, "weight is not a number"))?;
        }
        weights.validate()?;
        Ok(weights)
    }
}

/// What to do with source tokens absent from the phrase table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovPolicy {
    /// Copy the token through at a fixed feature cost.
    #[default]
    CopyThrough,
    /// Refuse to translate sentences containing unknown tokens.
    Strict,
}

impl FromStr for OovPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "copy" => Ok(OovPolicy::CopyThrough),
            "strict" => Ok(OovPolicy::Strict),
            other => Err(Error::validation(format!(
                "unknown OOV policy {other:?}; expected copy or strict"
            ))),
        }
    }
}

impl std::fmt::Display for OovPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OovPolicy::CopyThrough => "copy",
            OovPolicy::Strict => "strict",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    /// Histogram pruning: hypotheses kept per stack.
    pub stack_size: usize,
    /// Beam threshold as a probability ratio against the stack best;
    /// zero or negative disables threshold pruning.
    pub beam_threshold: f64,
    /// Maximum distortion jump; `None` is unlimited, 0 is monotone.
    pub distortion_limit: Option<usize>,
    pub max_phrase_len: usize,
    pub oov_policy: OovPolicy,
    /// log10 cost charged on the forward phrase feature for copied OOVs.
    pub oov_log10_cost: f64,
}

impl Default for DecoderParams {
    fn default() -> Self {
        DecoderParams {
            stack_size: 100,
            beam_threshold: 1e-5,
            distortion_limit: Some(6),
            max_phrase_len: 7,
            oov_policy: OovPolicy::CopyThrough,
            oov_log10_cost: -10.0,
        }
    }
}

impl DecoderParams {
    pub fn validate(&self) -> Result<()> {
        if self.stack_size == 0 {
            return Err(Error::validation("stack size must be at least 1"));
        }
        if self.max_phrase_len == 0 {
            return Err(Error::validation("max phrase length must be at least 1"));
        }
        if !self.beam_threshold.is_finite() {
            return Err(Error::validation("beam threshold must be finite"));
        }
        if !self.oov_log10_cost.is_finite() || self.oov_log10_cost > 0.0 {
            return Err(Error::validation("OOV cost must be a finite log10 value <= 0"));
        }
        Ok(())
    }
}

/// One translation from the n-best list. `score` equals `weights.dot(&features)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NBestEntry {
    pub translation: Vec<String>,
    pub features: FeatureVector,
    pub score: f64,
}

/// N-best file line: `sent-id ||| translation ||| feature:value pairs ||| score`.
pub fn format_nbest_line(sent_id: usize, entry: &NBestEntry) -> String {
    let features: Vec<String> = FEATURE_NAMES
        .iter()
        .zip(&entry.features)
        .map(|(name, value)| format!("{name}:{value}"))
        .collect();
    format!(
        "{sent_id} ||| {} ||| {} ||| {}",
        entry.translation.join(" "),
        features.join(" "),
        entry.score
    )
}

/// Source coverage bitset.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Coverage {
    bits: Vec<u64>,
    len: usize,
}

impl Coverage {
    fn new(len: usize) -> Self {
        Coverage {
            bits: vec![0; len.div_ceil(64)],
            len,
        }
    }

    fn get(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    fn clear_range(&self, start: usize, end: usize) -> bool {
        (start..end).all(|i| !self.get(i))
    }

    /// Maximal uncovered runs as half-open spans.
    fn gaps(&self) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut open: Option<usize> = None;
        for i in 0..self.len {
            match (self.get(i), open) {
                (false, None) => open = Some(i),
                (true, Some(start)) => {
                    spans.push((start, i));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(start) = open {
            spans.push((start, self.len));
        }
        spans
    }
}

/// A phrase-table or OOV option applicable to one source span.
struct TranslationOption {
    start: usize,
    end: usize,
    target: Vec<String>,
    target_ids: Vec<u32>,
    /// log10 of the four phrase-table scores (OOV cost on the forward slot).
    logs: [f64; 4],
}

struct Hyp {
    parent: usize,
    option: usize,
    coverage: Coverage,
    context: Vec<u32>,
    features: FeatureVector,
    score: f64,
    total: f64,
    prev_end: usize,
}

const NO_OPTION: usize = usize::MAX;

struct Search<'a> {
    tokens: &'a [String],
    lm: &'a NGramModel,
    weights: &'a FeatureWeights,
    params: &'a DecoderParams,
    options: Vec<TranslationOption>,
    /// Best over exact tilings of each span; admissible completion estimate.
    future: Vec<Vec<f64>>,
    arena: Vec<Hyp>,
}

fn build_options(
    tokens: &[String],
    ptable: &PhraseTable,
    lm: &NGramModel,
    params: &DecoderParams,
) -> Vec<TranslationOption> {
    let n = tokens.len();
    let max_len = params.max_phrase_len.min(ptable.max_source_len().max(1));
    let mut options = Vec::new();
    for start in 0..n {
        for end in start + 1..=n.min(start + max_len) {
            for entry in ptable.lookup(&tokens[start..end]) {
                let target: Vec<String> = entry.target.clone();
                options.push(TranslationOption {
                    start,
                    end,
                    target_ids: lm.ids(&target),
                    target,
                    logs: [
                        entry.phrase_fwd.log10(),
                        entry.lex_fwd.log10(),
                        entry.phrase_rev.log10(),
                        entry.lex_rev.log10(),
                    ],
                });
            }
        }
        if params.oov_policy == OovPolicy::CopyThrough
            && ptable.lookup(&tokens[start..start + 1]).is_empty()
        {
            let target = vec![tokens[start].clone()];
            let mut logs = [0.0; 4];
            logs[F_PHRASE_FWD] = params.oov_log10_cost;
            options.push(TranslationOption {
                start,
                end: start + 1,
                target_ids: lm.ids(&target),
                target,
                logs,
            });
        }
    }
    options
}

impl<'a> Search<'a> {
    fn new(
        tokens: &'a [String],
        ptable: &PhraseTable,
        lm: &'a NGramModel,
        weights: &'a FeatureWeights,
        params: &'a DecoderParams,
    ) -> Self {
        let options = build_options(tokens, ptable, lm, params);
        let future = future_cost(tokens.len(), &options, lm, weights);
        Search {
            tokens,
            lm,
            weights,
            params,
            options,
            future,
            arena: Vec::new(),
        }
    }

    fn future_of(&self, coverage: &Coverage) -> f64 {
        coverage
            .gaps()
            .iter()
            .map(|&(start, end)| self.future[start][end])
            .sum()
    }

    fn extend(&mut self, parent_idx: usize, option_idx: usize) -> usize {
        let option = &self.options[option_idx];
        let parent = &self.arena[parent_idx];
        let mut coverage = parent.coverage.clone();
        for i in option.start..option.end {
            coverage.set(i);
        }
        let mut features = parent.features;
        for (slot, log) in option.logs.iter().enumerate() {
            features[slot] += log;
        }
        features[F_WORD_PENALTY] -= option.target.len() as f64;
        features[F_PHRASE_PENALTY] -= 1.0;
        features[F_DISTORTION] -=
            (option.start as i64 - parent.prev_end as i64).unsigned_abs() as f64;
        let mut context = parent.context.clone();
        for &id in &option.target_ids {
            features[F_LM] += self.lm.logprob_ids(&context, id);
            context.push(id);
        }
        let keep = self.lm.order().saturating_sub(1);
        if context.len() > keep {
            context.drain(..context.len() - keep);
        }
        let score = self.weights.dot(&features);
        let total = score + self.future_of(&coverage);
        let prev_end = option.end;
        self.arena.push(Hyp {
            parent: parent_idx,
            option: option_idx,
            coverage,
            context,
            features,
            score,
            total,
            prev_end,
        });
        self.arena.len() - 1
    }

    fn prune(&self, stack: &mut Vec<usize>) {
        stack.sort_by(|&a, &b| self.arena[b].total.total_cmp(&self.arena[a].total));
        stack.truncate(self.params.stack_size);
        if self.params.beam_threshold > 0.0 && !stack.is_empty() {
            let cutoff = self.arena[stack[0]].total + self.params.beam_threshold.log10();
            stack.retain(|&idx| self.arena[idx].total >= cutoff);
        }
    }

    fn allowed(&self, hyp: &Hyp, option: &TranslationOption) -> bool {
        if !hyp.coverage.clear_range(option.start, option.end) {
            return false;
        }
        match self.params.distortion_limit {
            None => true,
            Some(d) => (option.start as i64 - hyp.prev_end as i64).unsigned_abs() as usize <= d,
        }
    }

    fn surface(&self, mut idx: usize) -> Vec<String> {
        let mut chain = Vec::new();
        while self.arena[idx].option != NO_OPTION {
            chain.push(self.arena[idx].option);
            idx = self.arena[idx].parent;
        }
        chain.reverse();
        chain
            .into_iter()
            .flat_map(|opt| self.options[opt].target.iter().cloned())
            .collect()
    }

    fn run(&mut self, n_best: usize) -> Result<Vec<NBestEntry>> {
        let n = self.tokens.len();
        if self.future[0][n] == f64::NEG_INFINITY {
            return Err(Error::DecodeFailure {
                sentence: self.tokens.join(" "),
            });
        }
        let root_coverage = Coverage::new(n);
        let total = self.future[0][n];
        self.arena.push(Hyp {
            parent: 0,
            option: NO_OPTION,
            coverage: root_coverage,
            context: vec![self.lm.start_id()],
            features: [0.0; FEATURE_COUNT],
            score: 0.0,
            total,
            prev_end: 0,
        });
        let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        stacks[0].push(0);
        for covered in 0..=n {
            let mut stack = std::mem::take(&mut stacks[covered]);
            self.prune(&mut stack);
            if covered == n {
                stacks[covered] = stack;
                break;
            }
            for &hyp_idx in &stack {
                for option_idx in 0..self.options.len() {
                    let option = &self.options[option_idx];
                    if !self.allowed(&self.arena[hyp_idx], option) {
                        continue;
                    }
                    let span = option.end - option.start;
                    let child = self.extend(hyp_idx, option_idx);
                    stacks[covered + span].push(child);
                }
            }
            stacks[covered] = stack;
        }

        let mut finals: Vec<NBestEntry> = stacks[n]
            .iter()
            .map(|&idx| {
                let hyp = &self.arena[idx];
                let end_term = self.lm.logprob_ids(&hyp.context, self.lm.end_id());
                let mut features = hyp.features;
                features[F_LM] += end_term;
                NBestEntry {
                    translation: self.surface(idx),
                    score: hyp.score + self.weights.0[F_LM] * end_term,
                    features,
                }
            })
            .collect();
        finals.sort_by(|a, b| b.score.total_cmp(&a.score));
        let mut seen: HashMap<String, ()> = HashMap::new();
        finals.retain(|entry| seen.insert(entry.translation.join(" "), ()).is_none());
        finals.truncate(n_best);
        if finals.is_empty() {
            return Err(Error::DecodeFailure {
                sentence: self.tokens.join(" "),
            });
        }
        Ok(finals)
    }
}

/// Per-span admissible completion estimates. Each span's base value is the
/// best single option covering it exactly, scored with the LM replaced by a
/// per-word upper bound; spans are then combined over split points.
fn future_cost(
    n: usize,
    options: &[TranslationOption],
    lm: &NGramModel,
    weights: &FeatureWeights,
) -> Vec<Vec<f64>> {
    let best_word = lm.best_logp_by_word();
    let mut cost = vec![vec![f64::NEG_INFINITY; n + 1]; n + 1];
    for option in options {
        let mut features = [0.0; FEATURE_COUNT];
        for (slot, log) in option.logs.iter().enumerate() {
            features[slot] = *log;
        }
        features[F_WORD_PENALTY] = -(option.target.len() as f64);
        features[F_PHRASE_PENALTY] = -1.0;
        features[F_LM] = option.target_ids.iter().map(|id| best_word[id]).sum();
        let estimate = weights.dot(&features);
        let slot = &mut cost[option.start][option.end];
        if estimate > *slot {
            *slot = estimate;
        }
    }
    for len in 2..=n {
        for start in 0..=n - len {
            let end = start + len;
            for split in start + 1..end {
                let combined = cost[start][split] + cost[split][end];
                if combined > cost[start][end] {
                    cost[start][end] = combined;
                }
            }
        }
    }
    if n == 0 {
        cost = vec![vec![0.0]];
    }
    cost
}

/// Up to `n` distinct best translations, sorted by score descending.
/// Duplicate surface strings are merged keeping the higher score.
pub fn nbest(
    sentence: &[String],
    ptable: &PhraseTable,
    lm: &NGramModel,
    weights: &FeatureWeights,
    params: &DecoderParams,
    n: usize,
) -> Result<Vec<NBestEntry>> {
    params.validate()?;
    weights.validate()?;
    if n == 0 {
        return Err(Error::validation("n-best size must be at least 1"));
    }
    if sentence.is_empty() {
        return Ok(vec![NBestEntry {
            translation: Vec::new(),
            features: [0.0; FEATURE_COUNT],
            score: 0.0,
        }]);
    }
    Search::new(sentence, ptable, lm, weights, params).run(n)
}

/// Best translation of one sentence with its model score.
pub fn decode(
    sentence: &[String],
    ptable: &PhraseTable,
    lm: &NGramModel,
    weights: &FeatureWeights,
    params: &DecoderParams,
) -> Result<(Vec<String>, f64)> {
    let mut entries = nbest(sentence, ptable, lm, weights, params, 1)?;
    let best = entries.remove(0);
    Ok((best.translation, best.score))
}
