//! Three-variant experiment harness: transform, cross-validate, retrain,
//! decode, aggregate.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::align::{symmetrize, SymmetrizationHeuristic};
use crate::align::{train_ibm1, viterbi_align, Direction, TranslationTable};
use crate::corpus::{invert_corpus, Corpus, TransliterationTable};
use crate::decoder::{decode, DecoderParams, FeatureWeights};
use crate::error::{Error, Result};
use crate::eval::{bleu, kfold_corpora, mean};
use crate::lm::{count_ngrams, estimate_kn, DiscountPolicy, NGramModel};
use crate::phrase::{build_phrase_table, PhraseTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Baseline,
    Romanized,
    Inverted,
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "romanized" => Ok(Variant::Romanized),
            "inverted" => Ok(Variant::Inverted),
            other => Err(Error::validation(format!(
                "unknown variant {other:?}; expected baseline, romanized or inverted"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Baseline => "baseline",
            Variant::Romanized => "romanized",
            Variant::Inverted => "inverted",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub folds: usize,
    pub seed: u64,
    pub em_iterations: usize,
    pub lm_order: usize,
    pub max_phrase_len: usize,
    pub decoder: DecoderParams,
    pub weights: FeatureWeights,
    /// Required by the romanized variant, unused otherwise.
    pub translit: Option<TransliterationTable>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            folds: 4,
            seed: 42,
            em_iterations: 10,
            lm_order: 5,
            max_phrase_len: 7,
            decoder: DecoderParams::default(),
            weights: FeatureWeights::default(),
            translit: None,
        }
    }
}

impl ExperimentConfig {
    fn summary(&self) -> String {
        format!(
            "folds={} seed={} em_iterations={} lm_order={} max_phrase_len={} \
             stack_size={} distortion_limit={}",
            self.folds,
            self.seed,
            self.em_iterations,
            self.lm_order,
            self.max_phrase_len,
            self.decoder.stack_size,
            match self.decoder.distortion_limit {
                Some(d) => d.to_string(),
                None => "none".into(),
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub variant: String,
    pub fold_bleus: Vec<f64>,
    pub mean_bleu: f64,
    pub config: String,
}

impl ExperimentResult {
    /// `variant,fold,bleu` rows plus a summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,fold,bleu\n");
        for (i, score) in self.fold_bleus.iter().enumerate() {
            out.push_str(&format!("{},{},{score:.2}\n", self.variant, i + 1));
        }
        out.push_str(&format!("{},mean,{:.2}\n", self.variant, self.mean_bleu));
        out
    }

    /// Human-readable per-fold table.
    pub fn table(&self) -> String {
        let mut out = format!("{:<12}", "model");
        for i in 1..=self.fold_bleus.len() {
            out.push_str(&format!("{:>10}", format!("fold-{i}")));
        }
        out.push_str(&format!("{:>10}\n", "mean"));
        out.push_str(&format!("{:<12}", self.variant));
        for score in &self.fold_bleus {
            out.push_str(&format!("{score:>10.2}"));
        }
        out.push_str(&format!("{:>10.2}\n", self.mean_bleu));
        out
    }
}

/// Alignment, phrase table and LM trained on one fold's training half.
pub struct FoldModels {
    pub ptable: PhraseTable,
    pub lm: NGramModel,
    pub forward: TranslationTable,
    pub reverse: TranslationTable,
}

/// Runs the standard training recipe: EM both directions, Viterbi alignment,
/// grow-diag-final symmetrization, phrase extraction and scoring, KN LM on
/// the target side.
pub fn train_models(
    corpus: &Corpus,
    em_iterations: usize,
    lm_order: usize,
    max_phrase_len: usize,
) -> Result<FoldModels> {
    let (forward, _) = train_ibm1(corpus, em_iterations, true)?;
    let (reverse, _) = train_ibm1(&corpus.swapped(), em_iterations, true)?;
    let alignments = corpus
        .pairs
        .iter()
        .map(|pair| {
            let fwd = viterbi_align(pair, &forward, Direction::SourceToTarget);
            let rev = viterbi_align(pair, &reverse, Direction::TargetToSource);
            symmetrize(&fwd, &rev, SymmetrizationHeuristic::GrowDiagFinal)
        })
        .collect::<Result<Vec<_>>>()?;
    let ptable = build_phrase_table(corpus, &alignments, max_phrase_len, &forward, &reverse)?;
    let targets: Vec<Vec<String>> = corpus.pairs.iter().map(|p| p.target.clone()).collect();
    let lm = estimate_kn(&count_ngrams(&targets, lm_order)?, DiscountPolicy::default())?;
    Ok(FoldModels {
        ptable,
        lm,
        forward,
        reverse,
    })
}

/// Decodes every source sentence of `test`, in corpus order.
pub fn decode_corpus(
    test: &Corpus,
    models: &FoldModels,
    weights: &FeatureWeights,
    params: &DecoderParams,
) -> Result<Vec<Vec<String>>> {
    test.pairs
        .par_iter()
        .map(|pair| Ok(decode(&pair.source, &models.ptable, &models.lm, weights, params)?.0))
        .collect()
}

fn annotate(error: Error, variant: Variant, fold: usize) -> Error {
    match error {
        Error::DecodeFailure { sentence } => Error::DecodeFailure {
            sentence: format!("[{variant} fold {fold}] {sentence}"),
        },
        other => Error::validation(format!("[{variant} fold {fold}] {other}")),
    }
}

/// Applies the variant transform, then trains and scores each
/// cross-validation fold independently.
pub fn run_experiment(
    variant: Variant,
    corpus: &Corpus,
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    config.weights.validate()?;
    config.decoder.validate()?;
    let transformed = match variant {
        Variant::Baseline => corpus.clone(),
        Variant::Romanized => {
            let table = config.translit.as_ref().ok_or_else(|| {
                Error::validation("romanized variant requires a transliteration table")
            })?;
            table.apply_corpus(corpus)
        }
        Variant::Inverted => invert_corpus(corpus),
    };
    let folds = kfold_corpora(&transformed, config.folds, config.seed)?;
    let mut fold_bleus = Vec::with_capacity(folds.len());
    for (fold, (train, test)) in folds.iter().enumerate() {
        let run = || -> Result<f64> {
            let models = train_models(
                train,
                config.em_iterations,
                config.lm_order,
                config.max_phrase_len,
            )?;
            let hypotheses = decode_corpus(test, &models, &config.weights, &config.decoder)?;
            let references: Vec<Vec<String>> =
                test.pairs.iter().map(|p| p.target.clone()).collect();
            Ok(bleu(&hypotheses, &references)?.bleu)
        };
        fold_bleus.push(run().map_err(|e| annotate(e, variant, fold + 1))?);
    }
    Ok(ExperimentResult {
        variant: variant.to_string(),
        mean_bleu: mean(&fold_bleus),
        fold_bleus,
        config: config.summary(),
    })
}
