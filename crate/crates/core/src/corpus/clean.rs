//! Character-class based cleaning of raw sentence pairs.
//!
//! The punctuation and emoji classes are configurable; the defaults ship in
//! `assets/default.rules` (embedded at compile time) and can be overridden
//! with a file of the same format.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use crate::corpus::SentencePair;
use crate::error::{Error, Result};

/// The default cleaning rules file, embedded verbatim.
pub const DEFAULT_RULES_FILE: &str = include_str!("../../assets/default.rules");

/// Character classes stripped by [`clean_pair`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleaningRules {
    punctuation: Vec<char>,
    emoji_ranges: Vec<(char, char)>,
}

impl Default for CleaningRules {
    fn default() -> Self {
        static DEFAULT: OnceLock<CleaningRules> = OnceLock::new();
        DEFAULT
            .get_or_init(|| {
                CleaningRules::parse(DEFAULT_RULES_FILE, "<default rules>")
                    .expect("embedded default rules must parse")
            })
            .clone()
    }
}

fn parse_char_spec(spec: &str) -> Option<char> {
    if let Some(hex) = spec.strip_prefix("U+").or_else(|| spec.strip_prefix("u+")) {
        let code = u32::from_str_radix(hex, 16).ok()?;
        char::from_u32(code)
    } else {
        let mut chars = spec.chars();
        let c = chars.next()?;
        chars.next().is_none().then_some(c)
    }
}

impl CleaningRules {
    /// Parses a rules file. Lines are `punctuation = <chars>` or
    /// `emoji_range = <lo> <hi>`; characters may be literal or `U+XXXX`.
    /// Repeated keys accumulate. `#` starts a comment.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut rules = CleaningRules {
            punctuation: Vec::new(),
            emoji_ranges: Vec::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, idx + 1, "expected `key = value`"))?;
            let value = value.trim();
            match key.trim() {
                "punctuation" => {
                    for spec in value.split_whitespace() {
                        let c = parse_char_spec(spec).ok_or_else(|| {
                            Error::parse(origin, idx + 1, format!("bad character spec `{spec}`"))
                        })?;
                        rules.punctuation.push(c);
                    }
                }
                "emoji_range" => {
                    let mut parts = value.split_whitespace();
                    let lo = parts.next().and_then(parse_char_spec);
                    let hi = parts.next().and_then(parse_char_spec);
                    match (lo, hi, parts.next()) {
                        (Some(lo), Some(hi), None) if lo <= hi => {
                            rules.emoji_ranges.push((lo, hi));
                        }
                        _ => {
                            return Err(Error::parse(
                                origin,
                                idx + 1,
                                "expected `emoji_range = <lo> <hi>`",
                            ))
                        }
                    }
                }
                other => {
                    return Err(Error::parse(origin, idx + 1, format!("unknown key `{other}`")))
                }
            }
        }
        Ok(rules)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        CleaningRules::parse(&text, &path.display().to_string())
    }

    pub fn is_punctuation(&self, c: char) -> bool {
        self.punctuation.contains(&c)
    }

    pub fn is_emoji(&self, c: char) -> bool {
        self.emoji_ranges.iter().any(|&(lo, hi)| c >= lo && c <= hi)
    }

    fn strips(&self, c: char) -> bool {
        self.is_punctuation(c) || self.is_emoji(c)
    }
}

fn clean_tokens(tokens: &[String], rules: &CleaningRules) -> Vec<String> {
    tokens
        .iter()
        .flat_map(|tok| {
            let stripped: String = tok.chars().filter(|&c| !rules.strips(c)).collect();
            stripped
                .split_whitespace()
                .map(str::to_string)
                .collect::<Vec<_>>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Strips punctuation and emoji from both sides and normalizes whitespace.
/// Returns `None` when either side becomes empty.
pub fn clean_pair(pair: &SentencePair, rules: &CleaningRules) -> Option<SentencePair> {
    let source = clean_tokens(&pair.source, rules);
    let target = clean_tokens(&pair.target, rules);
    if source.is_empty() || target.is_empty() {
        return None;
    }
    Some(SentencePair {
        source,
        target,
        similarity: pair.similarity,
    })
}

/// Whitespace tokenizer that additionally splits punctuation characters into
/// their own tokens. Meant for toy data; real corpora are expected to arrive
/// pre-tokenized.
pub fn basic_tokenize(text: &str, rules: &CleaningRules) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if rules.is_punctuation(c) {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}
