//! Grapheme-level transliteration (romanization).
//!
//! Tables are TSV files, one `grapheme<TAB>replacement` rule per line. A rule
//! may map several characters at once; matching is longest-first at every
//! position, unmapped characters pass through unchanged. Replacements may be
//! empty, which makes the table lossy.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::corpus::{Corpus, SentencePair};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct TransliterationTable {
    rules: HashMap<Vec<char>, String>,
    max_len: usize,
}

impl TransliterationTable {
    pub fn new(entries: impl IntoIterator<Item = (String, String)>) -> Self {
        let mut table = TransliterationTable::default();
        for (grapheme, replacement) in entries {
            table.insert(&grapheme, replacement);
        }
        table
    }

    fn insert(&mut self, grapheme: &str, replacement: String) {
        let key: Vec<char> = grapheme.chars().collect();
        self.max_len = self.max_len.max(key.len());
        self.rules.insert(key, replacement);
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Parses TSV text. `#` lines and blank lines are skipped; later rules for
    /// the same grapheme override earlier ones.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut table = TransliterationTable::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (grapheme, replacement) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, idx + 1, "expected `grapheme<TAB>replacement`"))?;
            if grapheme.is_empty() {
                return Err(Error::parse(origin, idx + 1, "empty grapheme"));
            }
            table.insert(grapheme, replacement.to_string());
        }
        Ok(table)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        TransliterationTable::parse(&text, &path.display().to_string())
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        let mut entries: Vec<(String, &str)> = self
            .rules
            .iter()
            .map(|(k, v)| (k.iter().collect::<String>(), v.as_str()))
            .collect();
        entries.sort();
        let mut out = Vec::new();
        for (grapheme, replacement) in entries {
            writeln!(out, "{grapheme}\t{replacement}").expect("write to vec");
        }
        fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Transliterates one token.
    pub fn apply_token(&self, token: &str) -> String {
        let chars: Vec<char> = token.chars().collect();
        let mut out = String::new();
        let mut i = 0;
        while i < chars.len() {
            let mut matched = false;
            let longest = self.max_len.min(chars.len() - i);
            for len in (1..=longest).rev() {
                if let Some(replacement) = self.rules.get(&chars[i..i + len]) {
                    out.push_str(replacement);
                    i += len;
                    matched = true;
                    break;
                }
            }
            if !matched {
                out.push(chars[i]);
                i += 1;
            }
        }
        out
    }

    /// Transliterates a token sequence, dropping tokens that map to nothing.
    pub fn apply_tokens(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .flat_map(|tok| {
                self.apply_token(tok)
                    .split_whitespace()
                    .map(str::to_string)
                    .collect::<Vec<_>>()
            })
            .filter(|t| !t.is_empty())
            .collect()
    }

    pub fn apply_pair(&self, pair: &SentencePair) -> SentencePair {
        SentencePair {
            source: self.apply_tokens(&pair.source),
            target: self.apply_tokens(&pair.target),
            similarity: pair.similarity,
        }
    }

    pub fn apply_corpus(&self, corpus: &Corpus) -> Corpus {
        corpus.with_pairs(corpus.pairs.iter().map(|p| self.apply_pair(p)).collect())
    }
}
