//! Subcommand implementations: thin orchestration over the library.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use pbsmt_core::align::{
    read_alignment_links, read_ttable, symmetrize, train_ibm1, viterbi_align, write_alignments,
    write_ttable, AlignmentMatrix, Direction, SymmetrizationHeuristic,
};
use pbsmt_core::config::PipelineConfig;
use pbsmt_core::corpus::{
    clean_pair, dedup, length_diff_histogram, read_parallel, read_similarity, similarity_filter,
    write_parallel, write_similarity, BpeModel, CleaningRules, Corpus, TransliterationTable,
};
use pbsmt_core::decoder::{self, format_nbest_line, tune_weights, FeatureWeights};
use pbsmt_core::eval::{self, run_experiment, ExperimentConfig, ExperimentResult};
use pbsmt_core::lm::{count_ngrams, estimate_kn, read_arpa, write_arpa, DiscountPolicy};
use pbsmt_core::phrase::{build_phrase_table, PhraseTable};
use pbsmt_core::{Error, Result};

fn require<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| {
        Error::validation(format!(
            "{key} is required; set it in the config or pass --{}",
            key.replace('_', "-")
        ))
    })
}

fn read_corpus(config: &PipelineConfig) -> Result<Corpus> {
    read_parallel(
        require(&config.source_file, "source_file")?,
        require(&config.target_file, "target_file")?,
    )
}

fn read_token_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(text
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect())
}

fn write_token_lines(path: &Path, lines: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    for tokens in lines {
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

fn load_weights(config: &PipelineConfig) -> Result<FeatureWeights> {
    match &config.weights_file {
        Some(path) => FeatureWeights::from_file(path),
        None => Ok(FeatureWeights::default()),
    }
}

fn write_report(result: &ExperimentResult, out: Option<PathBuf>) -> Result<()> {
    let csv = result.to_csv();
    match out {
        Some(path) => {
            fs::write(&path, csv).map_err(|e| Error::io(path.display().to_string(), e))?
        }
        None => print!("{csv}"),
    }
    eprint!("{}", result.table());
    Ok(())
}

pub fn preprocess(
    config: &PipelineConfig,
    rules: Option<PathBuf>,
    out_source: &Path,
    out_target: &Path,
    out_similarity: Option<PathBuf>,
) -> Result<()> {
    let rules = match rules {
        Some(path) => CleaningRules::from_file(&path)?,
        None => CleaningRules::default(),
    };
    let mut corpus = read_corpus(config)?;
    if let Some(path) = &config.similarity_file {
        let scores = read_similarity(path)?;
        if scores.len() != corpus.len() {
            return Err(Error::validation(format!(
                "similarity sidecar has {} scores for {} pairs",
                scores.len(),
                corpus.len()
            )));
        }
        for (pair, score) in corpus.pairs.iter_mut().zip(scores) {
            pair.similarity = Some(score);
        }
    }
    let before = corpus.len();
    corpus.pairs = corpus
        .pairs
        .iter()
        .filter_map(|p| clean_pair(p, &rules))
        .collect();
    let corpus = dedup(&corpus);
    write_parallel(&corpus, out_source, out_target)?;
    if let Some(path) = out_similarity {
        let scores = corpus
            .pairs
            .iter()
            .map(|p| {
                p.similarity.ok_or_else(|| {
                    Error::validation(
                        "--out-similarity needs similarity_file on the input side".to_string(),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        write_similarity(&scores, &path)?;
    }
    eprintln!("preprocess: kept {} of {before} pairs", corpus.len());
    Ok(())
}

pub fn filter(
    config: &PipelineConfig,
    out_source: &Path,
    out_target: &Path,
    out_similarity: Option<PathBuf>,
) -> Result<()> {
    let corpus = read_corpus(config)?;
    let scores = read_similarity(require(&config.similarity_file, "similarity_file")?)?;
    let kept = similarity_filter(&corpus, &scores, config.similarity_threshold)?;
    write_parallel(&kept, out_source, out_target)?;
    if let Some(path) = out_similarity {
        let scores: Vec<f64> = kept
            .pairs
            .iter()
            .map(|p| p.similarity.expect("filter attaches scores"))
            .collect();
        write_similarity(&scores, &path)?;
    }
    eprintln!(
        "filter: kept {} of {} pairs at threshold {}",
        kept.len(),
        corpus.len(),
        config.similarity_threshold
    );
    Ok(())
}

pub fn analyze_lengths(config: &PipelineConfig, out: Option<PathBuf>) -> Result<()> {
    let corpus = read_corpus(config)?;
    let hist = length_diff_histogram(&corpus);
    let csv = hist.to_csv();
    match out {
        Some(path) => {
            fs::write(&path, csv).map_err(|e| Error::io(path.display().to_string(), e))?
        }
        None => print!("{csv}"),
    }
    println!("below-3-tokens: {:.2}%", hist.below_three_percent());
    Ok(())
}

pub fn romanize(config: &PipelineConfig, out_source: &Path, out_target: &Path) -> Result<()> {
    let table = TransliterationTable::from_file(require(&config.translit_file, "translit_file")?)?;
    let corpus = table.apply_corpus(&read_corpus(config)?);
    write_parallel(&corpus, out_source, out_target)
}

pub fn invert(config: &PipelineConfig, out_source: &Path, out_target: &Path) -> Result<()> {
    let corpus = pbsmt_core::corpus::invert_corpus(&read_corpus(config)?);
    write_parallel(&corpus, out_source, out_target)
}

pub fn bpe_train(config: &PipelineConfig, input: &Path, out: &Path) -> Result<()> {
    let sentences = read_token_lines(input)?;
    let model = BpeModel::train_from_sentences(
        sentences.iter().map(Vec::as_slice),
        config.bpe_merges,
    );
    model.to_file(out)?;
    eprintln!("bpe-train: learned {} merges", model.merges().len());
    Ok(())
}

pub fn bpe_apply(model: &Path, input: &Path, out: &Path) -> Result<()> {
    let model = BpeModel::from_file(model)?;
    let segmented: Vec<Vec<String>> = read_token_lines(input)?
        .par_iter()
        .map(|tokens| model.apply_tokens(tokens))
        .collect();
    write_token_lines(out, &segmented)
}

pub fn align(
    config: &PipelineConfig,
    heuristic: &str,
    out_forward: &Path,
    out_reverse: &Path,
    out_alignments: &Path,
) -> Result<()> {
    let heuristic: SymmetrizationHeuristic = heuristic.parse()?;
    let corpus = read_corpus(config)?;
    let (forward, trace) = train_ibm1(&corpus, config.em_iterations, true)?;
    let (reverse, _) = train_ibm1(&corpus.swapped(), config.em_iterations, true)?;
    let alignments = corpus
        .pairs
        .iter()
        .map(|pair| {
            let fwd = viterbi_align(pair, &forward, Direction::SourceToTarget);
            let rev = viterbi_align(pair, &reverse, Direction::TargetToSource);
            symmetrize(&fwd, &rev, heuristic)
        })
        .collect::<Result<Vec<_>>>()?;
    write_ttable(out_forward, &forward)?;
    write_ttable(out_reverse, &reverse)?;
    write_alignments(out_alignments, &alignments)?;
    if let Some(ll) = trace.log_likelihoods.last() {
        eprintln!("align: final log-likelihood {ll:.4}");
    }
    Ok(())
}

pub fn extract_phrases(
    config: &PipelineConfig,
    alignments: &Path,
    forward: &Path,
    reverse: &Path,
    out: &Path,
) -> Result<()> {
    let corpus = read_corpus(config)?;
    let links = read_alignment_links(alignments)?;
    if links.len() != corpus.len() {
        return Err(Error::validation(format!(
            "{} alignment lines for {} pairs",
            links.len(),
            corpus.len()
        )));
    }
    let matrices = corpus
        .pairs
        .iter()
        .zip(&links)
        .map(|(pair, line)| {
            AlignmentMatrix::from_links(pair.source.len(), pair.target.len(), line.iter().copied())
        })
        .collect::<Result<Vec<_>>>()?;
    let forward = read_ttable(forward)?;
    let reverse = read_ttable(reverse)?;
    let table = build_phrase_table(&corpus, &matrices, config.max_phrase_len, &forward, &reverse)?;
    table.to_file(out)?;
    eprintln!("extract-phrases: {} entries", table.len());
    Ok(())
}

pub fn train_lm(config: &PipelineConfig, out: &Path) -> Result<()> {
    let sentences = read_token_lines(require(&config.lm_text_file, "lm_text_file")?)?;
    let counts = count_ngrams(&sentences, config.lm_order)?;
    let model = estimate_kn(&counts, DiscountPolicy::default())?;
    write_arpa(out, &model)?;
    eprintln!(
        "train-lm: order {} over {} unigrams",
        model.order(),
        model.distinct(1)
    );
    Ok(())
}

pub fn translate(
    config: &PipelineConfig,
    phrase_table: &Path,
    lm: &Path,
    input: &Path,
    out: &Path,
    nbest: Option<usize>,
) -> Result<()> {
    let ptable = PhraseTable::from_file(phrase_table)?;
    let lm = read_arpa(lm)?;
    let weights = load_weights(config)?;
    let params = config.decoder_params();
    let sentences = read_token_lines(input)?;
    match nbest {
        None => {
            let translations: Vec<Vec<String>> = sentences
                .par_iter()
                .map(|sentence| Ok(decoder::decode(sentence, &ptable, &lm, &weights, &params)?.0))
                .collect::<Result<_>>()?;
            write_token_lines(out, &translations)
        }
        Some(n) => {
            let lists: Vec<Vec<decoder::NBestEntry>> = sentences
                .par_iter()
                .map(|sentence| decoder::nbest(sentence, &ptable, &lm, &weights, &params, n))
                .collect::<Result<_>>()?;
            let mut text = String::new();
            for (id, entries) in lists.iter().enumerate() {
                for entry in entries {
                    text.push_str(&format_nbest_line(id, entry));
                    text.push('\n');
                }
            }
            fs::write(out, text).map_err(|e| Error::io(out.display().to_string(), e))
        }
    }
}

pub fn tune(
    config: &PipelineConfig,
    phrase_table: &Path,
    lm: &Path,
    iterations: usize,
    out: &Path,
) -> Result<()> {
    let corpus = read_corpus(config)?;
    let ptable = PhraseTable::from_file(phrase_table)?;
    let lm = read_arpa(lm)?;
    let initial = load_weights(config)?;
    let params = config.decoder_params();
    let tune_set: Vec<(Vec<String>, Vec<String>)> = corpus
        .pairs
        .iter()
        .map(|p| (p.source.clone(), p.target.clone()))
        .collect();
    let tuned = tune_weights(&tune_set, &ptable, &lm, &params, initial, iterations)?;
    tuned.to_file(out)?;
    eprintln!("tune: wrote weights after {iterations} iterations");
    Ok(())
}

pub fn bleu(hyp: &Path, reference: &Path) -> Result<()> {
    let hypotheses = read_token_lines(hyp)?;
    let references = read_token_lines(reference)?;
    let report = eval::bleu(&hypotheses, &references)?;
    println!("{:.2}", report.bleu);
    Ok(())
}

fn experiment_config(config: &PipelineConfig) -> Result<ExperimentConfig> {
    let translit = match &config.translit_file {
        Some(path) => Some(TransliterationTable::from_file(path)?),
        None => None,
    };
    Ok(ExperimentConfig {
        folds: config.folds,
        seed: config.seed,
        em_iterations: config.em_iterations,
        lm_order: config.lm_order,
        max_phrase_len: config.max_phrase_len,
        decoder: config.decoder_params(),
        weights: load_weights(config)?,
        translit,
    })
}

pub fn crossval(config: &PipelineConfig, out: Option<PathBuf>) -> Result<()> {
    let corpus = read_corpus(config)?;
    let result = run_experiment(
        eval::Variant::Baseline,
        &corpus,
        &experiment_config(config)?,
    )?;
    write_report(&result, out)
}

pub fn experiment(config: &PipelineConfig, out: Option<PathBuf>) -> Result<()> {
    let corpus = read_corpus(config)?;
    let result = run_experiment(config.variant, &corpus, &experiment_config(config)?)?;
    write_report(&result, out)
}
