//! Parallel-corpus ingestion, filtering, transformation and analysis.
//!
//! The toolkit works on pre-tokenized text: one sentence per line, tokens
//! separated by whitespace. Line `i` of the source file and line `i` of the
//! target file form pair `i`. Similarity scores, when used, come from a
//! sidecar file with one decimal value per line.

mod bpe;
mod clean;
mod translit;

pub use bpe::BpeModel;
pub use clean::{basic_tokenize, clean_pair, CleaningRules, DEFAULT_RULES_FILE};
pub use translit::TransliterationTable;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One aligned sentence pair, both sides tokenized.
#[derive(Debug, Clone, PartialEq)]
pub struct SentencePair {
    pub source: Vec<String>,
    pub target: Vec<String>,
    /// Cross-lingual similarity in `[0,1]`, when a sidecar provided one.
    pub similarity: Option<f64>,
}

impl SentencePair {
    pub fn new(source: Vec<String>, target: Vec<String>) -> Self {
        SentencePair {
            source,
            target,
            similarity: None,
        }
    }

    /// Whitespace-tokenizes both sides of a raw line pair.
    pub fn from_raw(source: &str, target: &str) -> Self {
        SentencePair::new(
            source.split_whitespace().map(str::to_string).collect(),
            target.split_whitespace().map(str::to_string).collect(),
        )
    }

    pub fn source_text(&self) -> String {
        self.source.join(" ")
    }

    pub fn target_text(&self) -> String {
        self.target.join(" ")
    }

    /// Swaps source and target roles.
    pub fn swapped(&self) -> SentencePair {
        SentencePair {
            source: self.target.clone(),
            target: self.source.clone(),
            similarity: self.similarity,
        }
    }
}

/// An ordered list of sentence pairs with language labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub pairs: Vec<SentencePair>,
    pub source_lang: String,
    pub target_lang: String,
}

impl Corpus {
    pub fn new(pairs: Vec<SentencePair>) -> Self {
        Corpus {
            pairs,
            source_lang: String::new(),
            target_lang: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn with_pairs(&self, pairs: Vec<SentencePair>) -> Corpus {
        Corpus {
            pairs,
            source_lang: self.source_lang.clone(),
            target_lang: self.target_lang.clone(),
        }
    }

    /// Sub-corpus at the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Corpus {
        self.with_pairs(indices.iter().map(|&i| self.pairs[i].clone()).collect())
    }

    /// Swaps source and target on every pair (used for reverse-direction
    /// alignment training).
    pub fn swapped(&self) -> Corpus {
        Corpus {
            pairs: self.pairs.iter().map(SentencePair::swapped).collect(),
            source_lang: self.target_lang.clone(),
            target_lang: self.source_lang.clone(),
        }
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = Vec::new();
    let mut reader = BufReader::new(file);
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        while buf.last() == Some(&b'\n') || buf.last() == Some(&b'\r') {
            buf.pop();
        }
        let text = std::str::from_utf8(&buf).map_err(|_| Error::InvalidUtf8 {
            path: path.display().to_string(),
            line: line_no,
        })?;
        lines.push(text.to_string());
    }
    Ok(lines)
}

/// Reads a parallel corpus from two line-aligned UTF-8 text files.
///
/// Lines are whitespace-tokenized as-is; no cleaning is applied. The two
/// files must have the same number of lines.
pub fn read_parallel(source_path: &Path, target_path: &Path) -> Result<Corpus> {
    let src = read_lines(source_path)?;
    let tgt = read_lines(target_path)?;
    if src.len() != tgt.len() {
        return Err(Error::validation(format!(
            "line count mismatch: {} has {} lines, {} has {}",
            source_path.display(),
            src.len(),
            target_path.display(),
            tgt.len()
        )));
    }
    let pairs = src
        .iter()
        .zip(tgt.iter())
        .map(|(s, t)| SentencePair::from_raw(s, t))
        .collect();
    Ok(Corpus::new(pairs))
}

/// Writes a corpus back to two parallel text files, one sentence per line.
pub fn write_parallel(corpus: &Corpus, source_path: &Path, target_path: &Path) -> Result<()> {
    let mut src = String::new();
    let mut tgt = String::new();
    for pair in &corpus.pairs {
        src.push_str(&pair.source_text());
        src.push('\n');
        tgt.push_str(&pair.target_text());
        tgt.push('\n');
    }
    fs::write(source_path, src).map_err(|e| Error::io(source_path.display().to_string(), e))?;
    fs::write(target_path, tgt).map_err(|e| Error::io(target_path.display().to_string(), e))?;
    Ok(())
}

/// Reads a similarity sidecar: one decimal value per line.
pub fn read_similarity(path: &Path) -> Result<Vec<f64>> {
    let lines = read_lines(path)?;
    lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            line.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(path.display().to_string(), i + 1, "expected a number"))
        })
        .collect()
}

pub fn write_similarity(scores: &[f64], path: &Path) -> Result<()> {
    let mut out = String::new();
    for s in scores {
        let _ = writeln!(out, "{s}");
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Removes exact duplicate pairs, keeping the first occurrence of each
/// `(source, target)` string pair. Pairs matching on one side only are kept.
pub fn dedup(corpus: &Corpus) -> Corpus {
    let mut seen = HashSet::new();
    let pairs = corpus
        .pairs
        .iter()
        .filter(|p| seen.insert((p.source_text(), p.target_text())))
        .cloned()
        .collect();
    corpus.with_pairs(pairs)
}

/// Keeps exactly the pairs whose similarity score is `>= threshold`,
/// preserving order. Kept pairs carry their score in `similarity`.
pub fn similarity_filter(corpus: &Corpus, scores: &[f64], threshold: f64) -> Result<Corpus> {
    if scores.len() != corpus.len() {
        return Err(Error::validation(format!(
            "similarity sidecar has {} scores for {} pairs",
            scores.len(),
            corpus.len()
        )));
    }
    for (i, &s) in scores.iter().enumerate() {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::validation(format!(
                "similarity score {s} at line {} outside [0,1]",
                i + 1
            )));
        }
    }
    let pairs = corpus
        .pairs
        .iter()
        .zip(scores)
        .filter(|(_, &s)| s >= threshold)
        .map(|(p, &s)| {
            let mut p = p.clone();
            p.similarity = Some(s);
            p
        })
        .collect();
    Ok(corpus.with_pairs(pairs))
}

/// Token-count length-difference categories: 0, 1-3, 4-5 and 6+.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LengthDiffHistogram {
    pub identical: usize,
    pub diff_1_3: usize,
    pub diff_4_5: usize,
    pub diff_6_plus: usize,
    /// Pairs whose difference is strictly below three tokens.
    pub below_three: usize,
    pub total: usize,
}

impl LengthDiffHistogram {
    pub fn counts(&self) -> [(&'static str, usize); 4] {
        [
            ("0", self.identical),
            ("1-3", self.diff_1_3),
            ("4-5", self.diff_4_5),
            ("6+", self.diff_6_plus),
        ]
    }

    pub fn percent(&self, count: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * count as f64 / self.total as f64
        }
    }

    /// Share of pairs with a length difference under three tokens, percent.
    pub fn below_three_percent(&self) -> f64 {
        self.percent(self.below_three)
    }

    /// `category,count,percent` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,count,percent\n");
        for (name, count) in self.counts() {
            let _ = writeln!(out, "{name},{count},{:.2}", self.percent(count));
        }
        out
    }
}

/// Buckets every pair by `|len(source) - len(target)|` in tokens.
pub fn length_diff_histogram(corpus: &Corpus) -> LengthDiffHistogram {
    let mut hist = LengthDiffHistogram::default();
    for pair in &corpus.pairs {
        let diff = pair.source.len().abs_diff(pair.target.len());
        match diff {
            0 => hist.identical += 1,
            1..=3 => hist.diff_1_3 += 1,
            4..=5 => hist.diff_4_5 += 1,
            _ => hist.diff_6_plus += 1,
        }
        if diff < 3 {
            hist.below_three += 1;
        }
        hist.total += 1;
    }
    hist
}

/// Reverses the source token order; the target side is untouched.
pub fn invert_source(pair: &SentencePair) -> SentencePair {
    let mut inverted = pair.clone();
    inverted.source.reverse();
    inverted
}

/// Applies [`invert_source`] to every pair.
pub fn invert_corpus(corpus: &Corpus) -> Corpus {
    corpus.with_pairs(corpus.pairs.iter().map(invert_source).collect())
}

/// Requested split sizes for [`split_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub tune: usize,
    pub test: usize,
}

/// Splits a corpus into disjoint train/tune/test parts of the requested
/// sizes. The assignment is a seeded shuffle; each part keeps the original
/// corpus order internally.
pub fn split_corpus(
    corpus: &Corpus,
    sizes: SplitSizes,
    seed: u64,
) -> Result<(Corpus, Corpus, Corpus)> {
    let need = sizes.train + sizes.tune + sizes.test;
    if need > corpus.len() {
        return Err(Error::validation(format!(
            "split sizes sum to {need} but corpus has {} pairs",
            corpus.len()
        )));
    }
    let mut indices: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let take = |n: usize, offset: usize| {
        let mut part: Vec<usize> = indices[offset..offset + n].to_vec();
        part.sort_unstable();
        corpus.select(&part)
    };
    let train = take(sizes.train, 0);
    let tune = take(sizes.tune, sizes.train);
    let test = take(sizes.test, sizes.train + sizes.tune);
    Ok((train, tune, test))
}
