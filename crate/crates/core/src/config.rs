//! Declarative pipeline configuration.
//!
//! Line-oriented `key = value` with optional `[section]` headers. Sections
//! are organizational only; keys are globally unique, and later assignments
//! win. Every key has a matching command-line override flag.

use std::fs;
use std::path::{Path, PathBuf};

use crate::decoder::{DecoderParams, OovPolicy};
use crate::error::{Error, Result};
use crate::eval::Variant;

/// Every recognized config key, one flag each on the CLI side.
pub const CONFIG_KEYS: [&str; 19] = [
    "source_file",
    "target_file",
    "similarity_file",
    "lm_text_file",
    "translit_file",
    "weights_file",
    "similarity_threshold",
    "lm_order",
    "bpe_merges",
    "em_iterations",
    "max_phrase_len",
    "stack_size",
    "beam_threshold",
    "distortion_limit",
    "oov_policy",
    "variant",
    "folds",
    "seed",
    "threads",
];

const SECTIONS: [&str; 5] = ["paths", "filter", "model", "decoder", "experiment"];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub source_file: Option<PathBuf>,
    pub target_file: Option<PathBuf>,
    pub similarity_file: Option<PathBuf>,
    pub lm_text_file: Option<PathBuf>,
    pub translit_file: Option<PathBuf>,
    pub weights_file: Option<PathBuf>,
    pub similarity_threshold: f64,
    pub lm_order: usize,
    pub bpe_merges: usize,
    pub em_iterations: usize,
    pub max_phrase_len: usize,
    pub stack_size: usize,
    pub beam_threshold: f64,
    pub distortion_limit: Option<usize>,
    pub oov_policy: OovPolicy,
    pub variant: Variant,
    pub folds: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            source_file: None,
            target_file: None,
            similarity_file: None,
            lm_text_file: None,
            translit_file: None,
            weights_file: None,
            similarity_threshold: 0.9,
            lm_order: 5,
            bpe_merges: 32_000,
            em_iterations: 10,
            max_phrase_len: 7,
            stack_size: 100,
            beam_threshold: 1e-5,
            distortion_limit: Some(6),
            oov_policy: OovPolicy::CopyThrough,
            variant: Variant::Baseline,
            folds: 4,
            seed: 42,
            threads: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(
    value: &str,
    origin: &str,
    line: usize,
    what: &str,
) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(origin, line, format!("{what} is not valid: {value:?}")))
}

impl PipelineConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str, origin: &str, line: usize) -> Result<()> {
        let path = |v: &str| Some(PathBuf::from(v));
        match key {
            "source_file" => self.source_file = path(value),
            "target_file" => self.target_file = path(value),
            "similarity_file" => self.similarity_file = path(value),
            "lm_text_file" => self.lm_text_file = path(value),
            "translit_file" => self.translit_file = path(value),
            "weights_file" => self.weights_file = path(value),
            "similarity_threshold" => {
                self.similarity_threshold = parse_num(value, origin, line, "threshold")?
            }
            "lm_order" => self.lm_order = parse_num(value, origin, line, "LM order")?,
            "bpe_merges" => self.bpe_merges = parse_num(value, origin, line, "merge count")?,
            "em_iterations" => {
                self.em_iterations = parse_num(value, origin, line, "iteration count")?
            }
            "max_phrase_len" => {
                self.max_phrase_len = parse_num(value, origin, line, "phrase length")?
            }
            "stack_size" => self.stack_size = parse_num(value, origin, line, "stack size")?,
            "beam_threshold" => {
                self.beam_threshold = parse_num(value, origin, line, "beam threshold")?
            }
            "distortion_limit" => {
                self.distortion_limit = if value == "none" {
                    None
                } else {
                    Some(parse_num(value, origin, line, "distortion limit")?)
                }
            }
            "oov_policy" => {
                self.oov_policy = value
                    .parse()
                    .map_err(|e| Error::parse(origin, line, format!("{e}")))?
            }
            "variant" => {
                self.variant = value
                    .parse()
                    .map_err(|e| Error::parse(origin, line, format!("{e}")))?
            }
            "folds" => self.folds = parse_num(value, origin, line, "fold count")?,
            "seed" => self.seed = parse_num(value, origin, line, "seed")?,
            "threads" => self.threads = Some(parse_num(value, origin, line, "thread count")?),
            other => {
                return Err(Error::parse(origin, line, format!("unknown key {other:?}")));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &str) -> Result<PipelineConfig> {
        let mut config = PipelineConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(section) = line.strip_prefix('[') {
                let section = section.strip_suffix(']').ok_or_else(|| {
                    Error::parse(origin, idx + 1, "unterminated section header")
                })?;
                if !SECTIONS.contains(&section) {
                    return Err(Error::parse(
                        origin,
                        idx + 1,
                        format!("unknown section {section:?}"),
                    ));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, idx + 1, "expected `key = value`"))?;
            config.set(key.trim(), value.trim(), origin, idx + 1)?;
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        PipelineConfig::parse(&text, &path.display().to_string())
    }

    /// Checks numeric ranges and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            return Err(Error::validation(format!(
                "similarity_threshold must lie in [0,1], got {}",
                self.similarity_threshold
            )));
        }
        if self.lm_order == 0 {
            return Err(Error::validation("lm_order must be at least 1"));
        }
        if self.em_iterations == 0 {
            return Err(Error::validation("em_iterations must be at least 1"));
        }
        if self.folds < 2 {
            return Err(Error::validation("folds must be at least 2"));
        }
        self.decoder_params().validate()?;
        for (key, path) in [
            ("source_file", &self.source_file),
            ("target_file", &self.target_file),
            ("similarity_file", &self.similarity_file),
            ("lm_text_file", &self.lm_text_file),
            ("translit_file", &self.translit_file),
            ("weights_file", &self.weights_file),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(Error::validation(format!(
                        "{key} does not exist: {}",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn decoder_params(&self) -> DecoderParams {
        DecoderParams {
            stack_size: self.stack_size,
            beam_threshold: self.beam_threshold,
            distortion_limit: self.distortion_limit,
            max_phrase_len: self.max_phrase_len,
            oov_policy: self.oov_policy,
            ..DecoderParams::default()
        }
    }

    /// Worker thread count: explicit setting, else the environment fallback,
    /// else zero (meaning "let the runtime decide").
    pub fn resolve_threads(&self) -> usize {
        self.resolve_threads_with(|name| std::env::var(name).ok())
    }

    fn resolve_threads_with(&self, env: impl Fn(&str) -> Option<String>) -> usize {
        self.threads
            .or_else(|| env("PBSMT_THREADS").and_then(|v| v.parse().ok()))
            .unwrap_or(0)
    }
}
