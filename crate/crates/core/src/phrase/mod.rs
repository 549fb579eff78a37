//! Alignment-consistent phrase extraction and phrase table scoring.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::align::{AlignmentMatrix, TranslationTable};
use crate::corpus::{Corpus, SentencePair};
use crate::error::{Error, Result};

/// Floor for lexical-weight factors so unlinked words without a NULL model
/// cannot zero out a whole phrase.
const LEX_FLOOR: f64 = 1e-12;

/// One phrase-pair occurrence, with word links relative to the phrase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedPhrase {
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub links: Vec<(usize, usize)>,
}

/// An aggregated phrase pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhrasePair {
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub count: u64,
}

/// Extracts every phrase pair consistent with the alignment: all links from
/// the source span stay inside the target span and vice versa, at least one
/// link lies inside, and spans may extend over unaligned boundary words.
/// Both sides are capped at `max_len` words.
pub fn extract_phrases(
    pair: &SentencePair,
    alignment: &AlignmentMatrix,
    max_len: usize,
) -> Result<Vec<ExtractedPhrase>> {
    if alignment.source_len != pair.source.len() || alignment.target_len != pair.target.len() {
        return Err(Error::validation(format!(
            "alignment is {}x{} but pair is {}x{}",
            alignment.source_len,
            alignment.target_len,
            pair.source.len(),
            pair.target.len()
        )));
    }
    let links: Vec<(usize, usize)> = alignment.links().collect();
    let m = pair.source.len();
    let n = pair.target.len();
    let mut out = Vec::new();
    for t_start in 0..n {
        for t_end in t_start..n.min(t_start + max_len) {
            let mut s_min = usize::MAX;
            let mut s_max = 0;
            for &(i, j) in &links {
                if j >= t_start && j <= t_end {
                    s_min = s_min.min(i);
                    s_max = s_max.max(i);
                }
            }
            if s_min == usize::MAX {
                continue;
            }
            // Consistency: no link may leave the target span from inside the
            // minimal source span.
            let consistent = links
                .iter()
                .all(|&(i, j)| i < s_min || i > s_max || (j >= t_start && j <= t_end));
            if !consistent {
                continue;
            }
            // Grow the source span over unaligned words on both sides.
            let mut s_s = s_min;
            loop {
                let mut s_e = s_max;
                loop {
                    if s_e - s_s < max_len {
                        out.push(make_phrase(pair, &links, s_s, s_e, t_start, t_end));
                    }
                    s_e += 1;
                    if s_e >= m || alignment.source_is_aligned(s_e) {
                        break;
                    }
                }
                if s_s == 0 || alignment.source_is_aligned(s_s - 1) {
                    break;
                }
                s_s -= 1;
            }
        }
    }
    Ok(out)
}

fn make_phrase(
    pair: &SentencePair,
    links: &[(usize, usize)],
    s_start: usize,
    s_end: usize,
    t_start: usize,
    t_end: usize,
) -> ExtractedPhrase {
    let mut phrase_links: Vec<(usize, usize)> = links
        .iter()
        .filter(|&&(i, j)| i >= s_start && i <= s_end && j >= t_start && j <= t_end)
        .map(|&(i, j)| (i - s_start, j - t_start))
        .collect();
    phrase_links.sort_unstable();
    ExtractedPhrase {
        source: pair.source[s_start..=s_end].to_vec(),
        target: pair.target[t_start..=t_end].to_vec(),
        links: phrase_links,
    }
}

/// Runs extraction over a whole corpus, in sentence order.
pub fn extract_corpus_phrases(
    corpus: &Corpus,
    alignments: &[AlignmentMatrix],
    max_len: usize,
) -> Result<Vec<ExtractedPhrase>> {
    if corpus.len() != alignments.len() {
        return Err(Error::validation(format!(
            "corpus has {} pairs but {} alignments were given",
            corpus.len(),
            alignments.len()
        )));
    }
    let per_sentence: Vec<Result<Vec<ExtractedPhrase>>> = corpus
        .pairs
        .par_iter()
        .zip(alignments.par_iter())
        .map(|(pair, alignment)| extract_phrases(pair, alignment, max_len))
        .collect();
    let mut out = Vec::new();
    for extracted in per_sentence {
        out.extend(extracted?);
    }
    Ok(out)
}

/// One scored phrase table line.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseTableEntry {
    pub source: Vec<String>,
    pub target: Vec<String>,
    /// φ(target | source), relative frequency.
    pub phrase_fwd: f64,
    /// lex(target | source), alignment-averaged lexical weight.
    pub lex_fwd: f64,
    /// φ(source | target).
    pub phrase_rev: f64,
    /// lex(source | target).
    pub lex_rev: f64,
}

/// Phrase table with an index by source phrase.
#[derive(Debug, Clone, Default)]
pub struct PhraseTable {
    entries: Vec<PhraseTableEntry>,
    by_source: HashMap<String, (usize, usize)>,
}

impl PhraseTable {
    /// Sorts entries by phrase pair and builds the source index.
    pub fn from_entries(mut entries: Vec<PhraseTableEntry>) -> Self {
        entries.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
        let mut by_source: HashMap<String, (usize, usize)> = HashMap::new();
        let mut start = 0;
        for idx in 0..=entries.len() {
            let boundary = idx == entries.len()
                || (idx > 0 && entries[idx].source != entries[idx - 1].source);
            if boundary && idx > start {
                by_source.insert(entries[start].source.join(" "), (start, idx));
                start = idx;
            }
        }
        PhraseTable { entries, by_source }
    }

    pub fn entries(&self) -> &[PhraseTableEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All translations of a source phrase.
    pub fn lookup(&self, source: &[String]) -> &[PhraseTableEntry] {
        match self.by_source.get(&source.join(" ")) {
            Some(&(start, end)) => &self.entries[start..end],
            None => &[],
        }
    }

    /// Longest source phrase in the table, in words.
    pub fn max_source_len(&self) -> usize {
        self.entries.iter().map(|e| e.source.len()).max().unwrap_or(0)
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for e in &self.entries {
            writeln!(
                out,
                "{} ||| {} ||| {} {} {} {}",
                e.source.join(" "),
                e.target.join(" "),
                e.phrase_fwd,
                e.lex_fwd,
                e.phrase_rev,
                e.lex_rev
            )
            .expect("write to vec");
        }
        fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let origin = path.display().to_string();
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry = parse_entry(line).ok_or_else(|| {
                Error::parse(
                    &origin,
                    idx + 1,
                    "expected `src ||| tgt ||| p1 p2 p3 p4`",
                )
            })?;
            entries.push(entry);
        }
        Ok(PhraseTable::from_entries(entries))
    }
}

fn parse_entry(line: &str) -> Option<PhraseTableEntry> {
    let mut fields = line.split(" ||| ");
    let source: Vec<String> = fields.next()?.split_whitespace().map(str::to_string).collect();
    let target: Vec<String> = fields.next()?.split_whitespace().map(str::to_string).collect();
    let scores: Vec<f64> = fields
        .next()?
        .split_whitespace()
        .map(|v| v.parse().ok())
        .collect::<Option<Vec<f64>>>()?;
    if fields.next().is_some() || source.is_empty() || target.is_empty() || scores.len() != 4 {
        return None;
    }
    if scores.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
        return None;
    }
    Some(PhraseTableEntry {
        source,
        target,
        phrase_fwd: scores[0],
        lex_fwd: scores[1],
        phrase_rev: scores[2],
        lex_rev: scores[3],
    })
}

struct PairStats {
    source: Vec<String>,
    target: Vec<String>,
    count: u64,
    /// Distinct internal alignments with occurrence counts, first-seen order.
    alignments: Vec<(Vec<(usize, usize)>, u64)>,
}

/// Scores an extraction multiset into a four-feature table. φ features are
/// relative frequencies; lexical weights use the most frequent internal
/// alignment of each pair (ties keep the first seen).
pub fn score_phrase_table(
    extractions: &[ExtractedPhrase],
    forward: &TranslationTable,
    reverse: &TranslationTable,
) -> Result<PhraseTable> {
    if extractions.is_empty() {
        return Err(Error::validation("no phrase pairs were extracted"));
    }
    let mut stats: BTreeMap<(String, String), PairStats> = BTreeMap::new();
    let mut source_totals: BTreeMap<String, u64> = BTreeMap::new();
    let mut target_totals: BTreeMap<String, u64> = BTreeMap::new();
    for phrase in extractions {
        let key = (phrase.source.join(" "), phrase.target.join(" "));
        *source_totals.entry(key.0.clone()).or_insert(0) += 1;
        *target_totals.entry(key.1.clone()).or_insert(0) += 1;
        let entry = stats.entry(key).or_insert_with(|| PairStats {
            source: phrase.source.clone(),
            target: phrase.target.clone(),
            count: 0,
            alignments: Vec::new(),
        });
        entry.count += 1;
        match entry.alignments.iter_mut().find(|(a, _)| *a == phrase.links) {
            Some((_, n)) => *n += 1,
            None => entry.alignments.push((phrase.links.clone(), 1)),
        }
    }

    let entries = stats
        .into_iter()
        .map(|((src_key, tgt_key), stat)| {
            let links = stat
                .alignments
                .iter()
                .fold(None::<&(Vec<(usize, usize)>, u64)>, |best, cand| match best {
                    Some(b) if cand.1 <= b.1 => best,
                    _ => Some(cand),
                })
                .map(|(a, _)| a.as_slice())
                .unwrap_or(&[]);
            PhraseTableEntry {
                phrase_fwd: stat.count as f64 / source_totals[&src_key] as f64,
                phrase_rev: stat.count as f64 / target_totals[&tgt_key] as f64,
                lex_fwd: lexical_weight(&stat.target, &stat.source, links, forward, false),
                lex_rev: lexical_weight(&stat.source, &stat.target, links, reverse, true),
                source: stat.source,
                target: stat.target,
            }
        })
        .collect();
    Ok(PhraseTable::from_entries(entries))
}

/// Standard lexical weight: for every generated word, average t over its
/// linked conditioning words, or t(word | NULL) when unlinked; product over
/// the generated side. `flip` selects which link column is the generated one.
fn lexical_weight(
    generated: &[String],
    conditioning: &[String],
    links: &[(usize, usize)],
    table: &TranslationTable,
    flip: bool,
) -> f64 {
    let mut weight = 1.0;
    for (g, word) in generated.iter().enumerate() {
        let mut sum = 0.0;
        let mut linked = 0usize;
        for &(i, j) in links {
            let (cond_pos, gen_pos) = if flip { (j, i) } else { (i, j) };
            if gen_pos == g {
                sum += table.prob(&conditioning[cond_pos], word);
                linked += 1;
            }
        }
        let factor = if linked > 0 {
            sum / linked as f64
        } else {
            table.prob_null(word)
        };
        weight *= factor.max(LEX_FLOOR);
    }
    weight
}

/// End-to-end helper: extract over the corpus and score.
pub fn build_phrase_table(
    corpus: &Corpus,
    alignments: &[AlignmentMatrix],
    max_len: usize,
    forward: &TranslationTable,
    reverse: &TranslationTable,
) -> Result<PhraseTable> {
    let extractions = extract_corpus_phrases(corpus, alignments, max_len)?;
    score_phrase_table(&extractions, forward, reverse)
}
