//! Shared fixtures and reference implementations for the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use pbsmt_core::decoder::{DecoderParams, FeatureWeights, OovPolicy, FEATURE_COUNT, FEATURE_NAMES};
use pbsmt_core::lm::NGramModel;
use pbsmt_core::phrase::PhraseTable;

pub fn toks(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_string).collect()
}

pub fn lines(text: &[&str]) -> Vec<Vec<String>> {
    text.iter().map(|l| toks(l)).collect()
}

fn slot(name: &str) -> usize {
    FEATURE_NAMES
        .iter()
        .position(|&n| n == name)
        .expect("known feature name")
}

struct OracleOption {
    start: usize,
    end: usize,
    target: Vec<String>,
    logs: [f64; 4],
}

fn oracle_options(
    tokens: &[String],
    ptable: &PhraseTable,
    params: &DecoderParams,
) -> Vec<OracleOption> {
    let n = tokens.len();
    let mut options = Vec::new();
    for start in 0..n {
        for end in start + 1..=n.min(start + params.max_phrase_len) {
            for entry in ptable.lookup(&tokens[start..end]) {
                options.push(OracleOption {
                    start,
                    end,
                    target: entry.target.clone(),
                    logs: [
                        entry.phrase_fwd.log10(),
                        entry.lex_fwd.log10(),
                        entry.phrase_rev.log10(),
                        entry.lex_rev.log10(),
                    ],
                });
            }
        }
        if params.oov_policy == OovPolicy::CopyThrough
            && ptable.lookup(&tokens[start..start + 1]).is_empty()
        {
            let mut logs = [0.0; 4];
            logs[0] = params.oov_log10_cost;
            options.push(OracleOption {
                start,
                end: start + 1,
                target: vec![tokens[start].clone()],
                logs,
            });
        }
    }
    options
}

#[allow(clippy::too_many_arguments)]
fn walk(
    options: &[OracleOption],
    lm: &NGramModel,
    weights: &FeatureWeights,
    params: &DecoderParams,
    n: usize,
    mask: u64,
    prev_end: usize,
    context: &[u32],
    features: [f64; FEATURE_COUNT],
    surface: &mut Vec<String>,
    complete: &mut Vec<(Vec<String>, f64)>,
) {
    if mask == (1u64 << n) - 1 {
        let mut features = features;
        features[slot("lm")] += lm.logprob_ids(context, lm.end_id());
        complete.push((surface.clone(), weights.dot(&features)));
        return;
    }
    for option in options {
        let span: u64 = ((1u64 << (option.end - option.start)) - 1) << option.start;
        if mask & span != 0 {
            continue;
        }
        let jump = (option.start as i64 - prev_end as i64).unsigned_abs() as usize;
        if params.distortion_limit.is_some_and(|d| jump > d) {
            continue;
        }
        let mut features = features;
        for (i, log) in option.logs.iter().enumerate() {
            features[i] += log;
        }
        features[slot("word_penalty")] -= option.target.len() as f64;
        features[slot("phrase_penalty")] -= 1.0;
        features[slot("distortion")] -= jump as f64;
        let mut context = context.to_vec();
        for word in &option.target {
            let id = lm.word_id(word);
            features[slot("lm")] += lm.logprob_ids(&context, id);
            context.push(id);
        }
        let keep = lm.order().saturating_sub(1);
        if context.len() > keep {
            context.drain(..context.len() - keep);
        }
        let before = surface.len();
        surface.extend(option.target.iter().cloned());
        walk(
            options,
            lm,
            weights,
            params,
            n,
            mask | span,
            option.end,
            &context,
            features,
            surface,
            complete,
        );
        surface.truncate(before);
    }
}

/// Every complete derivation, deduplicated by surface string keeping the best
/// score, sorted best-first. An exact reference for the stack decoder on
/// short sentences.
pub fn oracle_nbest(
    tokens: &[String],
    ptable: &PhraseTable,
    lm: &NGramModel,
    weights: &FeatureWeights,
    params: &DecoderParams,
) -> Vec<(Vec<String>, f64)> {
    if tokens.is_empty() {
        return vec![(Vec::new(), 0.0)];
    }
    assert!(tokens.len() < 64, "oracle uses a 64-bit coverage mask");
    let options = oracle_options(tokens, ptable, params);
    let mut complete = Vec::new();
    walk(
        &options,
        lm,
        weights,
        params,
        tokens.len(),
        0,
        0,
        &[lm.start_id()],
        [0.0; FEATURE_COUNT],
        &mut Vec::new(),
        &mut complete,
    );
    let mut best: HashMap<String, (Vec<String>, f64)> = HashMap::new();
    for (surface, score) in complete {
        let key = surface.join(" ");
        match best.get_mut(&key) {
            Some(kept) if kept.1 >= score => {}
            Some(kept) => *kept = (surface, score),
            None => {
                best.insert(key, (surface, score));
            }
        }
    }
    let mut out: Vec<(Vec<String>, f64)> = best.into_values().collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}

/// Decoder settings with every pruning mechanism disabled.
pub fn exhaustive_params() -> DecoderParams {
    DecoderParams {
        stack_size: usize::MAX,
        beam_threshold: 0.0,
        distortion_limit: None,
        ..DecoderParams::default()
    }
}
