//! ARPA backoff-model serialization.
//!
//! Values are printed with seven decimal places, which parse back to the
//! same f64 and reprint identically, so write -> read -> write is
//! byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lm::{NGramModel, SENT_END, SENT_START, UNK};
use crate::vocab::Vocab;

pub fn write_arpa(path: &Path, model: &NGramModel) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "\\data\\").expect("write to vec");
    for n in 1..=model.order() {
        writeln!(out, "ngram {n}={}", model.distinct(n)).expect("write to vec");
    }
    for n in 1..=model.order() {
        writeln!(out, "\n\\{n}-grams:").expect("write to vec");
        for (words, logp, bow) in model.sorted_lines(n) {
            match bow {
                Some(b) => writeln!(out, "{logp:.7}\t{words}\t{b:.7}"),
                None => writeln!(out, "{logp:.7}\t{words}"),
            }
            .expect("write to vec");
        }
    }
    writeln!(out, "\n\\end\\").expect("write to vec");
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

struct Reader<'a> {
    origin: String,
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::parse(&self.origin, line, message)
    }

    /// Next non-blank line with its 1-based number.
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        while self.pos < self.lines.len() {
            let line = self.lines[self.pos];
            self.pos += 1;
            if !line.trim().is_empty() {
                return Some((self.pos, line));
            }
        }
        None
    }

    fn peek_is_section(&self) -> bool {
        self.lines[self.pos..]
            .iter()
            .find(|l| !l.trim().is_empty())
            .is_some_and(|l| l.starts_with('\\'))
    }
}

pub fn read_arpa(path: &Path) -> Result<NGramModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = Reader {
        origin: path.display().to_string(),
        lines: text.lines().collect(),
        pos: 0,
    };

    let (no, line) = reader
        .next_content()
        .ok_or_else(|| reader.error(1, "empty file"))?;
    if line.trim() != "\\data\\" {
        return Err(reader.error(no, "expected \\data\\ header"));
    }

    let mut declared: Vec<usize> = Vec::new();
    while !reader.peek_is_section() {
        let Some((no, line)) = reader.next_content() else { break };
        let parsed = line
            .trim()
            .strip_prefix("ngram ")
            .and_then(|rest| rest.split_once('='))
            .and_then(|(n, c)| Some((n.parse::<usize>().ok()?, c.parse::<usize>().ok()?)));
        let Some((n, count)) = parsed else {
            return Err(reader.error(no, "expected `ngram N=count`"));
        };
        if n != declared.len() + 1 {
            return Err(reader.error(no, "n-gram orders must be contiguous from 1"));
        }
        declared.push(count);
    }
    let order = declared.len();
    if order == 0 {
        return Err(Error::validation(format!(
            "{}: no ngram counts declared",
            reader.origin
        )));
    }

    let mut vocab = Vocab::new();
    let mut entries: super::RawGrams = vec![Vec::new(); order];
    for n in 1..=order {
        let (no, line) = reader
            .next_content()
            .ok_or_else(|| reader.error(reader.lines.len(), format!("missing \\{n}-grams: section")))?;
        if line.trim() != format!("\\{n}-grams:") {
            return Err(reader.error(no, format!("expected \\{n}-grams: section")));
        }
        while !reader.peek_is_section() {
            let Some((no, line)) = reader.next_content() else { break };
            let entry = parse_gram_line(line, n, &mut vocab, order);
            match entry {
                Some(e) => entries[n - 1].push(e),
                None => return Err(reader.error(no, "malformed n-gram line")),
            }
        }
        if entries[n - 1].len() != declared[n - 1] {
            return Err(Error::validation(format!(
                "{}: header declares {} {n}-grams, section has {}",
                reader.origin,
                declared[n - 1],
                entries[n - 1].len()
            )));
        }
    }
    let (no, line) = reader
        .next_content()
        .ok_or_else(|| reader.error(reader.lines.len(), "missing \\end\\"))?;
    if line.trim() != "\\end\\" {
        return Err(reader.error(no, "expected \\end\\"));
    }

    // Words in higher-order grams must exist as unigrams, and the special
    // symbols must be present for scoring.
    let unigrams = entries[0].len() as u32;
    for level in &entries[1..] {
        if level.iter().flat_map(|(g, _, _)| g).any(|&id| id >= unigrams) {
            return Err(Error::validation(format!(
                "{}: n-gram word missing from the unigram section",
                reader.origin
            )));
        }
    }
    for symbol in [SENT_START, SENT_END, UNK] {
        if vocab.get(symbol).is_none_or(|id| id >= unigrams) {
            return Err(Error::validation(format!(
                "{}: model lacks required symbol {symbol}",
                reader.origin
            )));
        }
    }

    Ok(NGramModel::from_parts(order, vocab, entries))
}

fn parse_gram_line(
    line: &str,
    n: usize,
    vocab: &mut Vocab,
    order: usize,
) -> Option<(Vec<u32>, f64, Option<f64>)> {
    let mut fields = line.split('\t');
    let logp: f64 = fields.next()?.parse().ok()?;
    let words = fields.next()?;
    let bow = match fields.next() {
        Some(raw) => {
            if n == order {
                return None;
            }
            Some(raw.parse::<f64>().ok()?)
        }
        None => None,
    };
    if fields.next().is_some() || !logp.is_finite() {
        return None;
    }
    let gram: Vec<u32> = words.split(' ').map(|w| vocab.intern(w)).collect();
    if gram.len() != n || words.split(' ').any(str::is_empty) {
        return None;
    }
    Some((gram, logp, bow))
}
