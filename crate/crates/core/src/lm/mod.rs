//! Interpolated Kneser-Ney n-gram language models.
//!
//! Counting pads each sentence with one `<s>` and one `</s>`. Estimation
//! uses a single absolute discount per order; lower orders are built from
//! continuation counts (distinct left extensions), except that n-grams
//! starting with `<s>` keep raw counts since nothing can precede them. The
//! backoff weight of a context equals its interpolation weight, which makes
//! every stored context distribution sum to one over the vocabulary.
//!
//! All probabilities are log base 10, matching the ARPA format.

mod arpa;

pub use arpa::{read_arpa, write_arpa};

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::vocab::Vocab;

pub const SENT_START: &str = "<s>";
pub const SENT_END: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Log10 probability pinned on the `<s>` unigram, which is a context but
/// never a predicted event.
pub const START_LOGP: f64 = -99.0;

const COUNT_CHUNK: usize = 1024;

/// Raw n-gram counts for all orders up to `order`.
#[derive(Debug, Clone)]
pub struct NGramCounts {
    order: usize,
    vocab: Vocab,
    /// `counts[n-1]` holds the n-gram counts.
    counts: Vec<BTreeMap<Vec<u32>, u64>>,
}

fn count_chunk(sentences: &[Vec<u32>], order: usize) -> Vec<BTreeMap<Vec<u32>, u64>> {
    let mut counts = vec![BTreeMap::new(); order];
    for sentence in sentences {
        for n in 1..=order {
            for window in sentence.windows(n) {
                *counts[n - 1].entry(window.to_vec()).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Counts n-grams of every order `1..=order` over `<s>`-padded sentences.
pub fn count_ngrams(sentences: &[Vec<String>], order: usize) -> Result<NGramCounts> {
    if order == 0 {
        return Err(Error::validation("n-gram order must be at least 1"));
    }
    let mut vocab = Vocab::new();
    let start = vocab.intern(SENT_START);
    let end = vocab.intern(SENT_END);
    let encoded: Vec<Vec<u32>> = sentences
        .iter()
        .map(|sentence| {
            let mut ids = Vec::with_capacity(sentence.len() + 2);
            ids.push(start);
            ids.extend(sentence.iter().map(|w| vocab.intern(w)));
            ids.push(end);
            ids
        })
        .collect();

    let partials: Vec<Vec<BTreeMap<Vec<u32>, u64>>> = encoded
        .par_chunks(COUNT_CHUNK)
        .map(|chunk| count_chunk(chunk, order))
        .collect();
    let mut counts = vec![BTreeMap::new(); order];
    for partial in partials {
        for (acc, part) in counts.iter_mut().zip(partial) {
            for (gram, c) in part {
                *acc.entry(gram).or_insert(0) += c;
            }
        }
    }
    Ok(NGramCounts { order, vocab, counts })
}

impl NGramCounts {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Number of distinct n-grams at `n`.
    pub fn distinct(&self, n: usize) -> usize {
        self.counts[n - 1].len()
    }

    pub fn raw_count(&self, gram: &[&str]) -> u64 {
        let ids: Option<Vec<u32>> = gram.iter().map(|w| self.vocab.get(w)).collect();
        ids.and_then(|ids| self.counts.get(ids.len() - 1)?.get(&ids).copied())
            .unwrap_or(0)
    }

    /// Distinct left extensions of `gram` one order up.
    pub fn continuation_count(&self, gram: &[&str]) -> u64 {
        let Some(ids) = gram
            .iter()
            .map(|w| self.vocab.get(w))
            .collect::<Option<Vec<u32>>>()
        else {
            return 0;
        };
        let n = ids.len();
        if n >= self.order {
            return 0;
        }
        self.counts[n]
            .keys()
            .filter(|key| key[1..] == ids[..])
            .count() as u64
    }
}

/// How the per-order absolute discount is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiscountPolicy {
    /// One discount for every order; must lie in (0, 1).
    Fixed(f64),
    /// D = n1 / (n1 + 2 n2) from the count-of-counts histogram, falling back
    /// to 0.75 when the histogram is degenerate.
    CountOfCounts,
}

impl Default for DiscountPolicy {
    fn default() -> Self {
        DiscountPolicy::Fixed(0.75)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GramEntry {
    logp: f64,
    bow: Option<f64>,
}

/// A backoff n-gram model with log10 probabilities.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    vocab: Vocab,
    /// `grams[n-1]`: stored n-grams with probability and optional backoff.
    grams: Vec<HashMap<Vec<u32>, GramEntry>>,
}

fn discount_for(policy: DiscountPolicy, counts: &BTreeMap<Vec<u32>, u64>) -> Result<f64> {
    match policy {
        DiscountPolicy::Fixed(d) => {
            if d > 0.0 && d < 1.0 {
                Ok(d)
            } else {
                Err(Error::validation(format!(
                    "discount must lie strictly between 0 and 1, got {d}"
                )))
            }
        }
        DiscountPolicy::CountOfCounts => {
            let n1 = counts.values().filter(|&&c| c == 1).count() as f64;
            let n2 = counts.values().filter(|&&c| c == 2).count() as f64;
            if n1 == 0.0 || n1 + 2.0 * n2 == 0.0 {
                Ok(0.75)
            } else {
                Ok(n1 / (n1 + 2.0 * n2))
            }
        }
    }
}

/// Estimates an interpolated Kneser-Ney model from counts.
pub fn estimate_kn(counts: &NGramCounts, policy: DiscountPolicy) -> Result<NGramModel> {
    let order = counts.order;
    if counts.counts[0].is_empty() {
        return Err(Error::validation("cannot estimate a model from empty counts"));
    }
    let mut vocab = counts.vocab.clone();
    let start = vocab.get(SENT_START).expect("counting interns <s>");
    let unk = vocab.intern(UNK);

    // Adjusted counts: raw at the top order, continuation counts below,
    // except <s>-initial n-grams which keep raw counts.
    let mut adjusted: Vec<BTreeMap<Vec<u32>, u64>> = Vec::with_capacity(order);
    for n in 1..=order {
        if n == order {
            adjusted.push(counts.counts[n - 1].clone());
            break;
        }
        let mut adj: BTreeMap<Vec<u32>, u64> = counts.counts[n - 1]
            .iter()
            .filter(|(gram, _)| gram[0] == start)
            .map(|(gram, &c)| (gram.clone(), c))
            .collect();
        for key in counts.counts[n].keys() {
            debug_assert_ne!(key[1], start, "<s> can only open a window");
            *adj.entry(key[1..].to_vec()).or_insert(0) += 1;
        }
        adjusted.push(adj);
    }

    let mut grams: Vec<HashMap<Vec<u32>, GramEntry>> = vec![HashMap::new(); order];

    // Unigram level: <s> is excluded from the event space and pinned.
    let d1 = discount_for(policy, &adjusted[0])?;
    let mut denom1 = 0.0f64;
    let mut t1 = 0usize;
    for (gram, &a) in &adjusted[0] {
        if gram[0] != start {
            denom1 += a as f64;
            t1 += 1;
        }
    }
    let vocab_events = t1 as f64 + 1.0;
    let gamma1 = d1 * t1 as f64 / denom1;
    let mut prev: HashMap<Vec<u32>, f64> = HashMap::new();
    for (gram, &a) in &adjusted[0] {
        if gram[0] == start {
            continue;
        }
        let p = (a as f64 - d1).max(0.0) / denom1 + gamma1 / vocab_events;
        prev.insert(gram.clone(), p);
        grams[0].insert(gram.clone(), GramEntry { logp: p.log10(), bow: None });
    }
    let p_unk = gamma1 / vocab_events;
    prev.insert(vec![unk], p_unk);
    grams[0].insert(vec![unk], GramEntry { logp: p_unk.log10(), bow: None });
    grams[0].insert(vec![start], GramEntry { logp: START_LOGP, bow: None });

    for n in 2..=order {
        let dn = discount_for(policy, &adjusted[n - 1])?;
        let mut stats: BTreeMap<&[u32], (f64, usize)> = BTreeMap::new();
        for (gram, &a) in &adjusted[n - 1] {
            let entry = stats.entry(&gram[..n - 1]).or_insert((0.0, 0));
            entry.0 += a as f64;
            entry.1 += 1;
        }
        // Every context of a counted n-gram is itself a counted (n-1)-gram;
        // its backoff weight is the interpolation weight computed here.
        for (ctx, &(denom, types)) in &stats {
            let bow = (dn * types as f64 / denom).log10();
            grams[n - 2]
                .get_mut(*ctx)
                .expect("context stored at the lower order")
                .bow = Some(bow);
        }
        let mut cur: HashMap<Vec<u32>, f64> = HashMap::new();
        for (gram, &a) in &adjusted[n - 1] {
            let (denom, types) = stats[&gram[..n - 1]];
            let gamma = dn * types as f64 / denom;
            let lower = prev[&gram[1..]];
            let p = (a as f64 - dn).max(0.0) / denom + gamma * lower;
            cur.insert(gram.clone(), p);
            grams[n - 1].insert(gram.clone(), GramEntry { logp: p.log10(), bow: None });
        }
        prev = cur;
    }

    Ok(NGramModel { order, vocab, grams })
}

/// One parsed n-gram per element: (word ids, log10 probability, backoff).
pub(crate) type RawGrams = Vec<Vec<(Vec<u32>, f64, Option<f64>)>>;

impl NGramModel {
    pub(crate) fn from_parts(order: usize, vocab: Vocab, entries: RawGrams) -> Self {
        let grams = entries
            .into_iter()
            .map(|level| {
                level
                    .into_iter()
                    .map(|(gram, logp, bow)| (gram, GramEntry { logp, bow }))
                    .collect()
            })
            .collect();
        NGramModel { order, vocab, grams }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Distinct stored n-grams at order `n`.
    pub fn distinct(&self, n: usize) -> usize {
        self.grams[n - 1].len()
    }

    pub fn start_id(&self) -> u32 {
        self.vocab.get(SENT_START).expect("model stores <s>")
    }

    pub fn end_id(&self) -> u32 {
        self.vocab.get(SENT_END).expect("model stores </s>")
    }

    pub fn unk_id(&self) -> u32 {
        self.vocab.get(UNK).expect("model stores <unk>")
    }

    /// Maps a token to its id, falling back to `<unk>`.
    pub fn word_id(&self, token: &str) -> u32 {
        self.vocab.get(token).unwrap_or_else(|| self.unk_id())
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.word_id(t)).collect()
    }

    fn backoff_score(&self, context: &[u32], word: u32) -> f64 {
        let mut key = Vec::with_capacity(context.len() + 1);
        key.extend_from_slice(context);
        key.push(word);
        if let Some(entry) = self.grams[context.len()].get(&key) {
            return entry.logp;
        }
        if context.is_empty() {
            // Only reachable for ids absent from the unigram section.
            return self.grams[0][&vec![self.unk_id()]].logp;
        }
        let bow = self.grams[context.len() - 1]
            .get(context)
            .and_then(|e| e.bow)
            .unwrap_or(0.0);
        bow + self.backoff_score(&context[1..], word)
    }

    /// log10 P(word | context), backing off as needed. The context is
    /// truncated to the model order.
    pub fn logprob_ids(&self, context: &[u32], word: u32) -> f64 {
        let keep = context.len().min(self.order - 1);
        self.backoff_score(&context[context.len() - keep..], word)
    }

    pub fn logprob(&self, context: &[&str], word: &str) -> f64 {
        let ctx: Vec<u32> = context.iter().map(|w| self.word_id(w)).collect();
        self.logprob_ids(&ctx, self.word_id(word))
    }

    /// Total log10 probability of a sentence, with `<s>` context padding and
    /// a final `</s>` event.
    pub fn score_sequence(&self, tokens: &[String]) -> f64 {
        let mut context = vec![self.start_id()];
        let mut total = 0.0;
        for token in tokens {
            let id = self.word_id(token);
            total += self.logprob_ids(&context, id);
            context.push(id);
        }
        total + self.logprob_ids(&context, self.end_id())
    }

    /// 10^(-avg log10 P) over all events including sentence ends.
    pub fn perplexity(&self, sentences: &[Vec<String>]) -> f64 {
        let mut total = 0.0;
        let mut events = 0usize;
        for sentence in sentences {
            total += self.score_sequence(sentence);
            events += sentence.len() + 1;
        }
        10f64.powf(-total / events as f64)
    }

    /// Every stored unigram id (the scoring event space plus `<s>`).
    pub fn unigram_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.grams[0].keys().map(|g| g[0]).collect();
        ids.sort_unstable();
        ids
    }

    /// All stored n-grams carrying a backoff weight, i.e. real contexts.
    pub fn stored_contexts(&self) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = self
            .grams
            .iter()
            .flat_map(|level| {
                level
                    .iter()
                    .filter(|(_, e)| e.bow.is_some())
                    .map(|(g, _)| g.clone())
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Σ_w P(w | context) over the whole vocabulary, via backoff scoring.
    pub fn prob_mass(&self, context: &[u32]) -> f64 {
        self.unigram_ids()
            .iter()
            .map(|&w| 10f64.powf(self.logprob_ids(context, w)))
            .sum()
    }

    /// Per-word maximum stored log10 probability over n-grams ending in the
    /// word. Since every backoff weight is below one, this bounds any
    /// conditional probability of the word from above.
    pub fn best_logp_by_word(&self) -> HashMap<u32, f64> {
        let mut best: HashMap<u32, f64> = HashMap::new();
        for level in &self.grams {
            for (gram, entry) in level {
                let word = *gram.last().expect("grams are non-empty");
                best.entry(word)
                    .and_modify(|b| *b = b.max(entry.logp))
                    .or_insert(entry.logp);
            }
        }
        best
    }

    /// Sorted per-order entries as strings, used by the ARPA writer.
    fn sorted_lines(&self, n: usize) -> Vec<(String, f64, Option<f64>)> {
        let mut lines: Vec<(String, f64, Option<f64>)> = self.grams[n - 1]
            .iter()
            .map(|(gram, entry)| {
                let words: Vec<&str> = gram.iter().map(|&id| self.vocab.word(id)).collect();
                (words.join(" "), entry.logp, entry.bow)
            })
            .collect();
        lines.sort_by(|a, b| a.0.cmp(&b.0));
        lines
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentences(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    /// Corpus used for the hand-evaluated bigram model.
    fn abcd() -> Vec<Vec<String>> {
        sentences(&["a b", "c b", "a d"])
    }

    #[test]
    fn bigram_counts_include_boundaries() {
        let counts = count_ngrams(&sentences(&["a b"]), 2).unwrap();
        assert_eq!(counts.raw_count(&["<s>", "a"]), 1);
        assert_eq!(counts.raw_count(&["a", "b"]), 1);
        assert_eq!(counts.raw_count(&["b", "</s>"]), 1);
        assert_eq!(counts.distinct(2), 3);
    }

    #[test]
    fn unigram_counts_accumulate() {
        let counts = count_ngrams(&sentences(&["a a a"]), 1).unwrap();
        assert_eq!(counts.raw_count(&["a"]), 3);
    }

    #[test]
    fn continuation_counts_are_distinct_predecessors() {
        let counts = count_ngrams(&sentences(&["a b", "c b"]), 2).unwrap();
        assert_eq!(counts.continuation_count(&["b"]), 2);
        assert_eq!(counts.continuation_count(&["a"]), 1);
    }

    #[test]
    fn higher_order_counts_never_exceed_their_prefix() {
        let counts = count_ngrams(&abcd(), 2).unwrap();
        for (gram, &c) in &counts.counts[1] {
            let prefix_count = counts.counts[0][&gram[..1].to_vec()];
            assert!(c <= prefix_count);
        }
    }

    #[test]
    fn zero_order_is_rejected() {
        assert!(count_ngrams(&abcd(), 0).is_err());
    }

    #[test]
    fn empty_counts_are_rejected() {
        let counts = count_ngrams(&[], 2).unwrap();
        assert!(estimate_kn(&counts, DiscountPolicy::default()).is_err());
    }

    #[test]
    fn fixed_discount_is_validated() {
        let counts = count_ngrams(&abcd(), 2).unwrap();
        assert!(estimate_kn(&counts, DiscountPolicy::Fixed(0.0)).is_err());
        assert!(estimate_kn(&counts, DiscountPolicy::Fixed(1.0)).is_err());
        assert!(estimate_kn(&counts, DiscountPolicy::Fixed(0.5)).is_ok());
    }

    #[test]
    fn bigram_model_matches_hand_evaluation() {
        // D = 0.75. Continuation counts: a:1 c:1 b:2 d:1 </s>:2, total 7,
        // five event types plus <unk> -> six. γ1 = 0.75·5/7.
        // P1(b) = (2-0.75)/7 + γ1/6 = 11.25/42.
        // Context a: two extensions of one count each, γ(a) = 0.75.
        // P(b|a) = (1-0.75)/2 + 0.75·P1(b).
        let counts = count_ngrams(&abcd(), 2).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::Fixed(0.75)).unwrap();

        let p1_b = 11.25 / 42.0;
        assert!((10f64.powf(model.logprob(&[], "b")) - p1_b).abs() < 1e-9);

        let p_b_a = 0.125 + 0.75 * p1_b;
        assert!((10f64.powf(model.logprob(&["a"], "b")) - p_b_a).abs() < 1e-9);
        assert!((p_b_a - 0.32589285714285715).abs() < 1e-15);

        let gamma1 = 0.75 * 5.0 / 7.0;
        assert!((10f64.powf(model.logprob(&[], UNK)) - gamma1 / 6.0).abs() < 1e-9);

        // bow(a) = γ(a) = 0.75.
        let a = vec![model.word_id("a")];
        let bow = model.grams[1 - 1][&a].bow.unwrap();
        assert!((10f64.powf(bow) - 0.75).abs() < 1e-9);
    }

    #[test]
    fn stored_contexts_normalize_exactly() {
        let counts = count_ngrams(&abcd(), 2).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::Fixed(0.75)).unwrap();
        // Empty context plus every stored one.
        assert!((model.prob_mass(&[]) - 1.0).abs() < 1e-9);
        for ctx in model.stored_contexts() {
            assert!(
                (model.prob_mass(&ctx) - 1.0).abs() < 1e-9,
                "context {ctx:?}"
            );
        }
    }

    #[test]
    fn repeated_sentence_normalizes() {
        let counts = count_ngrams(&sentences(&["a b", "a b", "a b"]), 2).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::default()).unwrap();
        let a = vec![model.word_id("a")];
        assert!((model.prob_mass(&a) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unseen_context_backs_off_exactly() {
        let counts = count_ngrams(&abcd(), 2).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::default()).unwrap();
        // "z" maps to <unk>, which is stored without a backoff weight, so
        // P(b | z) must equal P1(b) exactly.
        assert_eq!(model.logprob(&["z"], "b"), model.logprob(&[], "b"));
    }

    #[test]
    fn five_gram_model_on_short_sentences() {
        let corpus = sentences(&["a b c", "a b d", "b c d e f g"]);
        let counts = count_ngrams(&corpus, 5).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::default()).unwrap();
        assert_eq!(model.order(), 5);
        for ctx in model.stored_contexts() {
            assert!(
                (model.prob_mass(&ctx) - 1.0).abs() < 1e-6,
                "context {ctx:?}"
            );
        }
        // Scoring is additive over conditional probabilities.
        let s: Vec<String> = sentences(&["a b c"]).remove(0);
        let by_hand = model.logprob(&["<s>"], "a")
            + model.logprob(&["<s>", "a"], "b")
            + model.logprob(&["<s>", "a", "b"], "c")
            + model.logprob(&["<s>", "a", "b", "c"], "</s>");
        assert!((model.score_sequence(&s) - by_hand).abs() < 1e-12);
    }

    #[test]
    fn count_of_counts_discount_stays_in_range() {
        let corpus = sentences(&["a b c d", "a b x", "y b c", "a z"]);
        let counts = count_ngrams(&corpus, 3).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::CountOfCounts).unwrap();
        for ctx in model.stored_contexts() {
            assert!((model.prob_mass(&ctx) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn start_symbol_is_pinned() {
        let counts = count_ngrams(&abcd(), 2).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::default()).unwrap();
        assert_eq!(model.logprob(&[], SENT_START), START_LOGP);
    }

    #[test]
    fn deterministic_corpus_has_perplexity_near_one() {
        let corpus = vec![vec!["a".to_string(); 1000]];
        let counts = count_ngrams(&corpus, 1).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::default()).unwrap();
        assert!(10f64.powf(model.logprob(&[], "a")) > 0.99);
        assert!(model.perplexity(&corpus) < 1.05);
    }

    #[test]
    fn training_perplexity_beats_the_uniform_baseline() {
        let corpus = sentences(&["a b a c", "a b", "a a a"]);
        let counts = count_ngrams(&corpus, 2).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::default()).unwrap();
        // Uniform over the event vocabulary: a, b, c, </s>, <unk>.
        let uniform = 5.0;
        assert!(model.perplexity(&corpus) <= uniform);
    }

    #[test]
    fn duplicating_the_corpus_does_not_hurt_training_perplexity() {
        for lines in [
            vec!["a b c", "a b d", "c a"],
            vec!["x y", "y x", "x x y"],
        ] {
            let corpus = sentences(&lines);
            let doubled: Vec<Vec<String>> =
                corpus.iter().chain(corpus.iter()).cloned().collect();
            for order in [1, 2, 3] {
                let base = estimate_kn(
                    &count_ngrams(&corpus, order).unwrap(),
                    DiscountPolicy::default(),
                )
                .unwrap();
                let dup = estimate_kn(
                    &count_ngrams(&doubled, order).unwrap(),
                    DiscountPolicy::default(),
                )
                .unwrap();
                assert!(
                    dup.perplexity(&corpus) <= base.perplexity(&corpus) + 1e-9,
                    "order {order}, lines {lines:?}"
                );
            }
        }
    }

    #[test]
    fn order_one_scores_equal_unigram_products() {
        let corpus = sentences(&["a b a", "b c"]);
        let counts = count_ngrams(&corpus, 1).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::default()).unwrap();
        let tokens: Vec<String> = "a b c".split_whitespace().map(str::to_string).collect();
        let product: f64 = tokens
            .iter()
            .map(|t| model.logprob(&[], t))
            .sum::<f64>()
            + model.logprob(&[], SENT_END);
        assert!((model.score_sequence(&tokens) - product).abs() < 1e-12);
    }

    #[test]
    fn oov_words_score_as_unk() {
        let counts = count_ngrams(&abcd(), 2).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::default()).unwrap();
        assert_eq!(model.logprob(&[], "zzz"), model.logprob(&[], UNK));
    }

    #[test]
    fn best_logp_bounds_conditionals() {
        let counts = count_ngrams(&abcd(), 2).unwrap();
        let model = estimate_kn(&counts, DiscountPolicy::default()).unwrap();
        let best = model.best_logp_by_word();
        for &ctx_word in &["a", "b", "c", "d", "<s>"] {
            for &w in &["a", "b", "c", "d"] {
                let lp = model.logprob(&[ctx_word], w);
                assert!(lp <= best[&model.word_id(w)] + 1e-12);
            }
        }
    }

    #[test]
    fn counting_is_deterministic() {
        let corpus = sentences(&["a b c", "b c a", "c a b", "a a a"]);
        let c1 = count_ngrams(&corpus, 3).unwrap();
        let c2 = count_ngrams(&corpus, 3).unwrap();
        assert_eq!(c1.counts, c2.counts);
    }
}
