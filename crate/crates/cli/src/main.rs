//! `pbsmt`: the pipeline entry point.
//!
//! Every subcommand reads its defaults from an optional config file; any
//! config key can be overridden by the flag of the same name. Errors print
//! as a single `error: ...` line, with the exit code encoding the class
//! (2 file access, 3 validation, 4 decode failure).

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use pbsmt_core::config::PipelineConfig;
use pbsmt_core::{Error, Result};

#[derive(Parser)]
#[command(name = "pbsmt", version, about = "Phrase-based statistical machine translation pipeline")]
struct Cli {
    /// Config file with `key = value` lines and optional [section] headers.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Cmd,
}

/// One override flag per config key.
#[derive(Args)]
struct Overrides {
    /// Source side of the parallel corpus.
    #[arg(long, global = true, value_name = "FILE")]
    source_file: Option<PathBuf>,
    /// Target side of the parallel corpus.
    #[arg(long, global = true, value_name = "FILE")]
    target_file: Option<PathBuf>,
    /// Per-line similarity scores for the parallel corpus.
    #[arg(long, global = true, value_name = "FILE")]
    similarity_file: Option<PathBuf>,
    /// Monolingual text for language-model training.
    #[arg(long, global = true, value_name = "FILE")]
    lm_text_file: Option<PathBuf>,
    /// Transliteration table (grapheme TAB replacement).
    #[arg(long, global = true, value_name = "FILE")]
    translit_file: Option<PathBuf>,
    /// Decoder feature weights file.
    #[arg(long, global = true, value_name = "FILE")]
    weights_file: Option<PathBuf>,
    /// Minimum similarity kept by `filter`.
    #[arg(long, global = true, value_name = "X")]
    similarity_threshold: Option<f64>,
    /// N-gram order of the language model.
    #[arg(long, global = true, value_name = "N")]
    lm_order: Option<usize>,
    /// Merge operations learned by `bpe-train`.
    #[arg(long, global = true, value_name = "N")]
    bpe_merges: Option<usize>,
    /// EM iterations for word alignment.
    #[arg(long, global = true, value_name = "N")]
    em_iterations: Option<usize>,
    /// Longest extracted source/target phrase.
    #[arg(long, global = true, value_name = "N")]
    max_phrase_len: Option<usize>,
    /// Decoder hypotheses kept per stack.
    #[arg(long, global = true, value_name = "N")]
    stack_size: Option<usize>,
    /// Decoder beam threshold ratio (0 disables).
    #[arg(long, global = true, value_name = "X")]
    beam_threshold: Option<f64>,
    /// Decoder distortion limit, or `none` for unlimited.
    #[arg(long, global = true, value_name = "N|none")]
    distortion_limit: Option<String>,
    /// Unknown-word handling: `copy` or `strict`.
    #[arg(long, global = true, value_name = "POLICY")]
    oov_policy: Option<String>,
    /// Experiment variant: baseline, romanized or inverted.
    #[arg(long, global = true, value_name = "NAME")]
    variant: Option<String>,
    /// Cross-validation fold count.
    #[arg(long, global = true, value_name = "N")]
    folds: Option<usize>,
    /// Seed for all randomized steps.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (falls back to PBSMT_THREADS, then all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

impl Overrides {
    fn apply(&self, config: &mut PipelineConfig) -> Result<()> {
        macro_rules! set_path {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    config.$field = Some(v.clone());
                }
            };
        }
        macro_rules! set_value {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    config.$field = v;
                }
            };
        }
        set_path!(source_file);
        set_path!(target_file);
        set_path!(similarity_file);
        set_path!(lm_text_file);
        set_path!(translit_file);
        set_path!(weights_file);
        set_value!(similarity_threshold);
        set_value!(lm_order);
        set_value!(bpe_merges);
        set_value!(em_iterations);
        set_value!(max_phrase_len);
        set_value!(stack_size);
        set_value!(beam_threshold);
        for (key, value) in [
            ("distortion_limit", &self.distortion_limit),
            ("oov_policy", &self.oov_policy),
            ("variant", &self.variant),
        ] {
            if let Some(v) = value {
                config.set(key, v, "arguments", 0)?;
            }
        }
        set_value!(folds);
        set_value!(seed);
        if let Some(v) = self.threads {
            config.threads = Some(v);
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Clean and deduplicate a parallel corpus.
    Preprocess {
        /// Cleaning rules file; built-in defaults otherwise.
        #[arg(long, value_name = "FILE")]
        rules: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out_source: PathBuf,
        #[arg(long, value_name = "FILE")]
        out_target: PathBuf,
        /// Pass the similarity sidecar through for the kept pairs.
        #[arg(long, value_name = "FILE")]
        out_similarity: Option<PathBuf>,
    },
    /// Keep pairs whose similarity score clears the threshold.
    Filter {
        #[arg(long, value_name = "FILE")]
        out_source: PathBuf,
        #[arg(long, value_name = "FILE")]
        out_target: PathBuf,
        #[arg(long, value_name = "FILE")]
        out_similarity: Option<PathBuf>,
    },
    /// Report the token length-difference histogram of a corpus.
    AnalyzeLengths {
        /// CSV destination; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Apply the transliteration table to both corpus sides.
    Romanize {
        #[arg(long, value_name = "FILE")]
        out_source: PathBuf,
        #[arg(long, value_name = "FILE")]
        out_target: PathBuf,
    },
    /// Reverse the source-side token order of every pair.
    Invert {
        #[arg(long, value_name = "FILE")]
        out_source: PathBuf,
        #[arg(long, value_name = "FILE")]
        out_target: PathBuf,
    },
    /// Learn a BPE merge table from text.
    BpeTrain {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Segment text with a trained BPE model.
    BpeApply {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Train word alignments; write translation tables and Pharaoh links.
    Align {
        /// Symmetrization: intersection, union or grow-diag-final.
        #[arg(long, value_name = "NAME", default_value = "grow-diag-final")]
        heuristic: String,
        #[arg(long, value_name = "FILE")]
        out_forward: PathBuf,
        #[arg(long, value_name = "FILE")]
        out_reverse: PathBuf,
        #[arg(long, value_name = "FILE")]
        out_alignments: PathBuf,
    },
    /// Extract and score a phrase table from alignments.
    ExtractPhrases {
        /// Pharaoh alignment file from `align`.
        #[arg(long, value_name = "FILE")]
        alignments: PathBuf,
        /// Forward translation table from `align`.
        #[arg(long, value_name = "FILE")]
        forward: PathBuf,
        /// Reverse translation table from `align`.
        #[arg(long, value_name = "FILE")]
        reverse: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Estimate a Kneser-Ney n-gram model and write it as ARPA.
    TrainLm {
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Translate text with a phrase table and language model.
    Translate {
        #[arg(long, value_name = "FILE")]
        phrase_table: PathBuf,
        #[arg(long, value_name = "FILE")]
        lm: PathBuf,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Emit an n-best list instead of single translations.
        #[arg(long, value_name = "N")]
        nbest: Option<usize>,
    },
    /// Tune decoder weights on a parallel tune set.
    Tune {
        #[arg(long, value_name = "FILE")]
        phrase_table: PathBuf,
        #[arg(long, value_name = "FILE")]
        lm: PathBuf,
        /// Outer decode-and-optimize rounds.
        #[arg(long, value_name = "N", default_value_t = 5)]
        iterations: usize,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Corpus BLEU of a hypothesis file against a reference file.
    Bleu {
        #[arg(long, value_name = "FILE")]
        hyp: PathBuf,
        #[arg(long = "ref", value_name = "FILE")]
        reference: PathBuf,
    },
    /// Cross-validate the full pipeline on a parallel corpus.
    Crossval {
        /// CSV destination; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Train and score one experiment variant across folds.
    Experiment {
        /// CSV destination; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    cli.overrides.apply(&mut config)?;
    config.validate()?;
    let threads = config.resolve_threads();
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::validation(format!("thread pool setup failed: {e}")))?;
    }
    match cli.command {
        Cmd::Preprocess {
            rules,
            out_source,
            out_target,
            out_similarity,
        } => commands::preprocess(&config, rules, &out_source, &out_target, out_similarity),
        Cmd::Filter {
            out_source,
            out_target,
            out_similarity,
        } => commands::filter(&config, &out_source, &out_target, out_similarity),
        Cmd::AnalyzeLengths { out } => commands::analyze_lengths(&config, out),
        Cmd::Romanize {
            out_source,
            out_target,
        } => commands::romanize(&config, &out_source, &out_target),
        Cmd::Invert {
            out_source,
            out_target,
        } => commands::invert(&config, &out_source, &out_target),
        Cmd::BpeTrain { input, out } => commands::bpe_train(&config, &input, &out),
        Cmd::BpeApply { model, input, out } => commands::bpe_apply(&model, &input, &out),
        Cmd::Align {
            heuristic,
            out_forward,
            out_reverse,
            out_alignments,
        } => commands::align(&config, &heuristic, &out_forward, &out_reverse, &out_alignments),
        Cmd::ExtractPhrases {
            alignments,
            forward,
            reverse,
            out,
        } => commands::extract_phrases(&config, &alignments, &forward, &reverse, &out),
        Cmd::TrainLm { out } => commands::train_lm(&config, &out),
        Cmd::Translate {
            phrase_table,
            lm,
            input,
            out,
            nbest,
        } => commands::translate(&config, &phrase_table, &lm, &input, &out, nbest),
        Cmd::Tune {
            phrase_table,
            lm,
            iterations,
            out,
        } => commands::tune(&config, &phrase_table, &lm, iterations, &out),
        Cmd::Bleu { hyp, reference } => commands::bleu(&hyp, &reference),
        Cmd::Crossval { out } => commands::crossval(&config, out),
        Cmd::Experiment { out } => commands::experiment(&config, out),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
