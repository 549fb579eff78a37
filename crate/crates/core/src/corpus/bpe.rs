//! Byte pair encoding over whitespace tokens.
//!
//! A word is split into characters with an end-of-word marker attached to the
//! last one (`low` -> `l o w</w>`). Training repeatedly merges the most
//! frequent adjacent symbol pair; ties go to the lexicographically smallest
//! pair and training stops early once the best pair occurs fewer than twice.
//! Applying a model replays merges in rank order, which makes segmentation
//! deterministic and reversible.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Marker appended to the final character of every word.
pub const WORD_END: &str = "</w>";

#[derive(Debug, Clone, Default)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
}

fn word_symbols(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let last = chars.len() - 1;
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i == last {
                format!("{c}{WORD_END}")
            } else {
                c.to_string()
            }
        })
        .collect()
}

fn merge_in_place(symbols: &mut Vec<String>, pair: &(String, String)) {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == pair.0 && symbols[i + 1] == pair.1 {
            out.push(format!("{}{}", pair.0, pair.1));
            i += 2;
        } else {
            out.push(std::mem::take(&mut symbols[i]));
            i += 1;
        }
    }
    *symbols = out;
}

impl BpeModel {
    pub fn from_merges(merges: Vec<(String, String)>) -> Self {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(rank, pair)| (pair.clone(), rank))
            .collect();
        BpeModel { merges, ranks }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Learns up to `max_merges` merges from word frequencies.
    pub fn train(word_freqs: &BTreeMap<String, u64>, max_merges: usize) -> Self {
        let mut vocab: Vec<(Vec<String>, u64)> = word_freqs
            .iter()
            .filter(|(w, _)| !w.is_empty())
            .map(|(w, &f)| (word_symbols(w), f))
            .collect();
        let mut merges = Vec::new();
        for _ in 0..max_merges {
            let mut pair_freqs: BTreeMap<(String, String), u64> = BTreeMap::new();
            for (symbols, freq) in &vocab {
                for window in symbols.windows(2) {
                    *pair_freqs
                        .entry((window[0].clone(), window[1].clone()))
                        .or_insert(0) += freq;
                }
            }
            // Ascending iteration plus a strict comparison keeps the smallest
            // pair on ties.
            let best = pair_freqs
                .into_iter()
                .fold(None::<((String, String), u64)>, |acc, (pair, freq)| match acc {
                    Some((_, best_freq)) if freq <= best_freq => acc,
                    _ => Some((pair, freq)),
                });
            let Some((pair, freq)) = best else { break };
            if freq < 2 {
                break;
            }
            for (symbols, _) in &mut vocab {
                merge_in_place(symbols, &pair);
            }
            merges.push(pair);
        }
        BpeModel::from_merges(merges)
    }

    /// Convenience wrapper counting token frequencies over sentences.
    pub fn train_from_sentences<'a>(
        sentences: impl IntoIterator<Item = &'a [String]>,
        max_merges: usize,
    ) -> Self {
        let mut freqs = BTreeMap::new();
        for sentence in sentences {
            for token in sentence {
                *freqs.entry(token.clone()).or_insert(0u64) += 1;
            }
        }
        BpeModel::train(&freqs, max_merges)
    }

    /// Segments one word into subword units.
    pub fn segment_word(&self, word: &str) -> Vec<String> {
        if word.is_empty() {
            return Vec::new();
        }
        let mut symbols = word_symbols(word);
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())))
                .min()
                .copied();
            let Some(rank) = best else { break };
            let pair = self.merges[rank].clone();
            merge_in_place(&mut symbols, &pair);
        }
        symbols
    }

    /// Segments a token sequence.
    pub fn apply_tokens(&self, tokens: &[String]) -> Vec<String> {
        let mut cache: HashMap<&str, Vec<String>> = HashMap::new();
        let mut out = Vec::with_capacity(tokens.len());
        for token in tokens {
            let pieces = cache
                .entry(token.as_str())
                .or_insert_with(|| self.segment_word(token));
            out.extend(pieces.iter().cloned());
        }
        out
    }

    /// Reassembles words from subword units by joining up to each end-of-word
    /// marker. A trailing fragment without a marker is kept as a word.
    pub fn decode_tokens(subwords: &[String]) -> Vec<String> {
        let mut words = Vec::new();
        let mut current = String::new();
        for piece in subwords {
            if let Some(stem) = piece.strip_suffix(WORD_END) {
                current.push_str(stem);
                words.push(std::mem::take(&mut current));
            } else {
                current.push_str(piece);
            }
        }
        if !current.is_empty() {
            words.push(current);
        }
        words
    }

    /// Writes the model: a merge-count header line, then one `left right`
    /// line per merge in rank order.
    pub fn to_file(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "{}", self.merges.len()).expect("write to vec");
        for (left, right) in &self.merges {
            writeln!(out, "{left} {right}").expect("write to vec");
        }
        fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, 1, "missing merge-count header"))?;
        let expected: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::parse(origin, 1, "merge-count header is not a number"))?;
        let mut merges = Vec::with_capacity(expected);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (left, right) = line
                .split_once(' ')
                .ok_or_else(|| Error::parse(origin, idx + 1, "expected `left right`"))?;
            if left.is_empty() || right.is_empty() || right.contains(' ') {
                return Err(Error::parse(origin, idx + 1, "expected `left right`"));
            }
            merges.push((left.to_string(), right.to_string()));
        }
        if merges.len() != expected {
            return Err(Error::validation(format!(
                "{origin}: header says {expected} merges, found {}",
                merges.len()
            )));
        }
        Ok(BpeModel::from_merges(merges))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        BpeModel::parse(&text, &path.display().to_string())
    }
}
