//! End-to-end tests driving the `pbsmt` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::{tempdir, TempDir};

fn pbsmt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pbsmt"))
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).expect("write fixture");
    path
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn pbsmt");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A deterministic copy language: both sides of every pair are identical, so
/// a correct pipeline translates held-in text perfectly.
fn copy_corpus(lines: usize) -> String {
    let mut text = String::new();
    for i in 0..lines {
        let len = 3 + i % 5;
        let tokens: Vec<String> = (0..len).map(|j| format!("w{}", (i * 7 + j * 3) % 11)).collect();
        text.push_str(&tokens.join(" "));
        text.push('\n');
    }
    text
}

struct Artifacts {
    dir: TempDir,
    source: PathBuf,
    phrase_table: PathBuf,
    lm: PathBuf,
}

/// Runs preprocess, align, extract-phrases and train-lm over the copy corpus.
fn build_artifacts() -> Artifacts {
    let dir = tempdir().expect("tempdir");
    let text = copy_corpus(24);
    let raw_src = write(dir.path(), "raw.src", &text);
    let raw_tgt = write(dir.path(), "raw.tgt", &text);
    let source = dir.path().join("clean.src");
    let target = dir.path().join("clean.tgt");
    run(pbsmt()
        .args(["preprocess", "--source-file"])
        .arg(&raw_src)
        .arg("--target-file")
        .arg(&raw_tgt)
        .arg("--out-source")
        .arg(&source)
        .arg("--out-target")
        .arg(&target));
    let forward = dir.path().join("fwd.ttable");
    let reverse = dir.path().join("rev.ttable");
    let alignments = dir.path().join("links.align");
    run(pbsmt()
        .args(["align", "--em-iterations", "5", "--source-file"])
        .arg(&source)
        .arg("--target-file")
        .arg(&target)
        .arg("--out-forward")
        .arg(&forward)
        .arg("--out-reverse")
        .arg(&reverse)
        .arg("--out-alignments")
        .arg(&alignments));
    let phrase_table = dir.path().join("phrases.tsv");
    run(pbsmt()
        .args(["extract-phrases", "--source-file"])
        .arg(&source)
        .arg("--target-file")
        .arg(&target)
        .arg("--alignments")
        .arg(&alignments)
        .arg("--forward")
        .arg(&forward)
        .arg("--reverse")
        .arg(&reverse)
        .arg("--out")
        .arg(&phrase_table));
    let lm = dir.path().join("model.arpa");
    run(pbsmt()
        .args(["train-lm", "--lm-order", "3", "--lm-text-file"])
        .arg(&target)
        .arg("--out")
        .arg(&lm));
    Artifacts {
        dir,
        source,
        phrase_table,
        lm,
    }
}

#[test]
fn bleu_of_identical_files_is_100() {
    let dir = tempdir().unwrap();
    let hyp = write(dir.path(), "hyp.txt", "a b c d e\nf g h\n");
    let refs = write(dir.path(), "ref.txt", "a b c d e\nf g h\n");
    let out = run(pbsmt().arg("bleu").arg("--hyp").arg(&hyp).arg("--ref").arg(&refs));
    assert_eq!(stdout(&out), "100.00\n");
}

#[test]
fn bleu_applies_the_brevity_penalty() {
    let dir = tempdir().unwrap();
    // A 9-token prefix of a 10-token reference: all precisions are 1, so the
    // score is 100 * exp(1 - 10/9) = 89.48.
    let hyp = write(dir.path(), "hyp.txt", "a b c d e f g h i\n");
    let refs = write(dir.path(), "ref.txt", "a b c d e f g h i j\n");
    let out = run(pbsmt().arg("bleu").arg("--hyp").arg(&hyp).arg("--ref").arg(&refs));
    assert_eq!(stdout(&out), "89.48\n");
}

#[test]
fn missing_input_file_exits_2() {
    let out = pbsmt()
        .args(["bleu", "--hyp", "/nonexistent.hyp", "--ref", "/nonexistent.ref"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.starts_with("error: "), "got: {err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn invalid_config_value_exits_3() {
    let dir = tempdir().unwrap();
    let hyp = write(dir.path(), "hyp.txt", "a\n");
    let out = pbsmt()
        .arg("bleu")
        .arg("--hyp")
        .arg(&hyp)
        .arg("--ref")
        .arg(&hyp)
        .args(["--folds", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("folds"));
}

#[test]
fn strict_oov_policy_exits_4_on_unknown_words() {
    let art = build_artifacts();
    let input = write(art.dir.path(), "in.txt", "w0 zzz w1\n");
    let out_path = art.dir.path().join("out.txt");
    let out = pbsmt()
        .arg("translate")
        .arg("--phrase-table")
        .arg(&art.phrase_table)
        .arg("--lm")
        .arg(&art.lm)
        .arg("--input")
        .arg(&input)
        .arg("--out")
        .arg(&out_path)
        .args(["--oov-policy", "strict"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr(&out));
    assert!(stderr(&out).starts_with("error: "));
}

#[test]
fn pipeline_translates_the_copy_language_perfectly() {
    let art = build_artifacts();
    let input_text = "w0 w3 w6 w9\nw7 w10 w2\nw3 w6 w9 w1 w4\n";
    let input = write(art.dir.path(), "in.txt", input_text);
    let refs = write(art.dir.path(), "refs.txt", input_text);
    let out_path = art.dir.path().join("out.txt");
    run(pbsmt()
        .arg("translate")
        .arg("--phrase-table")
        .arg(&art.phrase_table)
        .arg("--lm")
        .arg(&art.lm)
        .arg("--input")
        .arg(&input)
        .arg("--out")
        .arg(&out_path));
    assert_eq!(fs::read_to_string(&out_path).unwrap(), input_text);
    let out = run(pbsmt().arg("bleu").arg("--hyp").arg(&out_path).arg("--ref").arg(&refs));
    assert_eq!(stdout(&out), "100.00\n");
}

#[test]
fn nbest_lists_are_well_formed() {
    let art = build_artifacts();
    let input = write(art.dir.path(), "in.txt", "w0 w3 w6\nw7 w10\n");
    let out_path = art.dir.path().join("nbest.txt");
    run(pbsmt()
        .arg("translate")
        .arg("--phrase-table")
        .arg(&art.phrase_table)
        .arg("--lm")
        .arg(&art.lm)
        .arg("--input")
        .arg(&input)
        .arg("--out")
        .arg(&out_path)
        .args(["--nbest", "3"]));
    let text = fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(!lines.is_empty());
    assert!(lines[0].starts_with("0 ||| "));
    assert!(lines.iter().any(|l| l.starts_with("1 ||| ")));
    for line in &lines {
        assert_eq!(line.matches(" ||| ").count(), 3, "line: {line}");
        assert!(line.contains("lm:"), "line: {line}");
        let score: f64 = line.rsplit(" ||| ").next().unwrap().parse().unwrap();
        assert!(score.is_finite());
    }
}

#[test]
fn model_artifacts_are_deterministic() {
    let art = build_artifacts();
    let rerun = |suffix: &str| {
        let fwd = art.dir.path().join(format!("fwd{suffix}"));
        let rev = art.dir.path().join(format!("rev{suffix}"));
        let links = art.dir.path().join(format!("links{suffix}"));
        run(pbsmt()
            .args(["align", "--em-iterations", "5", "--source-file"])
            .arg(&art.source)
            .arg("--target-file")
            .arg(&art.source)
            .arg("--out-forward")
            .arg(&fwd)
            .arg("--out-reverse")
            .arg(&rev)
            .arg("--out-alignments")
            .arg(&links));
        (
            fs::read(&fwd).unwrap(),
            fs::read(&rev).unwrap(),
            fs::read(&links).unwrap(),
        )
    };
    assert_eq!(rerun(".a"), rerun(".b"));
    let lm_once = |suffix: &str| {
        let path = art.dir.path().join(format!("lm{suffix}"));
        run(pbsmt()
            .args(["train-lm", "--lm-order", "3", "--lm-text-file"])
            .arg(&art.source)
            .arg("--out")
            .arg(&path));
        fs::read(&path).unwrap()
    };
    assert_eq!(lm_once(".a"), lm_once(".b"));
}

#[test]
fn analyze_lengths_reports_the_histogram() {
    let dir = tempdir().unwrap();
    // Token-count pairs (10,10), (8,8), (8,9), (7,9), (8,4), (5,9):
    // differences 0 0 1 2 4 4.
    let line = |n: usize| vec!["x"; n].join(" ");
    let src = [10, 8, 8, 7, 8, 5].map(line).join("\n") + "\n";
    let tgt = [10, 8, 9, 9, 4, 9].map(line).join("\n") + "\n";
    let src = write(dir.path(), "src.txt", &src);
    let tgt = write(dir.path(), "tgt.txt", &tgt);
    let csv_path = dir.path().join("hist.csv");
    let out = run(pbsmt()
        .arg("analyze-lengths")
        .arg("--source-file")
        .arg(&src)
        .arg("--target-file")
        .arg(&tgt)
        .arg("--out")
        .arg(&csv_path));
    assert_eq!(
        fs::read_to_string(&csv_path).unwrap(),
        "category,count,percent\n0,2,33.33\n1-3,2,33.33\n4-5,2,33.33\n6+,0,0.00\n"
    );
    assert_eq!(stdout(&out), "below-3-tokens: 66.67%\n");
}

#[test]
fn preprocess_cleans_and_deduplicates() {
    let dir = tempdir().unwrap();
    let src = write(dir.path(), "src.txt", "Hello , world !\n\u{1F600} \u{1F600}\nHello , world !\n");
    let tgt = write(dir.path(), "tgt.txt", "a b\nc\na b\n");
    let out_src = dir.path().join("out.src");
    let out_tgt = dir.path().join("out.tgt");
    let out = run(pbsmt()
        .arg("preprocess")
        .arg("--source-file")
        .arg(&src)
        .arg("--target-file")
        .arg(&tgt)
        .arg("--out-source")
        .arg(&out_src)
        .arg("--out-target")
        .arg(&out_tgt));
    assert_eq!(fs::read_to_string(&out_src).unwrap(), "Hello world\n");
    assert_eq!(fs::read_to_string(&out_tgt).unwrap(), "a b\n");
    assert!(stderr(&out).contains("kept 1 of 3"));
}

#[test]
fn filter_keeps_pairs_clearing_the_threshold() {
    let dir = tempdir().unwrap();
    let src = write(dir.path(), "src.txt", "a a\nb b\nc c\n");
    let tgt = write(dir.path(), "tgt.txt", "x x\ny y\nz z\n");
    let sim = write(dir.path(), "sim.txt", "0.95\n0.5\n0.9\n");
    let out_src = dir.path().join("out.src");
    let out_tgt = dir.path().join("out.tgt");
    let out_sim = dir.path().join("out.sim");
    run(pbsmt()
        .arg("filter")
        .arg("--source-file")
        .arg(&src)
        .arg("--target-file")
        .arg(&tgt)
        .arg("--similarity-file")
        .arg(&sim)
        .arg("--out-source")
        .arg(&out_src)
        .arg("--out-target")
        .arg(&out_tgt)
        .arg("--out-similarity")
        .arg(&out_sim));
    assert_eq!(fs::read_to_string(&out_src).unwrap(), "a a\nc c\n");
    assert_eq!(fs::read_to_string(&out_tgt).unwrap(), "x x\nz z\n");
    let kept: Vec<f64> = fs::read_to_string(&out_sim)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(kept, vec![0.95, 0.9]);
}

#[test]
fn invert_reverses_only_the_source_side() {
    let dir = tempdir().unwrap();
    let src = write(dir.path(), "src.txt", "a b c\nd e\n");
    let tgt = write(dir.path(), "tgt.txt", "p q\nr\n");
    let out_src = dir.path().join("out.src");
    let out_tgt = dir.path().join("out.tgt");
    run(pbsmt()
        .arg("invert")
        .arg("--source-file")
        .arg(&src)
        .arg("--target-file")
        .arg(&tgt)
        .arg("--out-source")
        .arg(&out_src)
        .arg("--out-target")
        .arg(&out_tgt));
    assert_eq!(fs::read_to_string(&out_src).unwrap(), "c b a\ne d\n");
    assert_eq!(fs::read_to_string(&out_tgt).unwrap(), "p q\nr\n");
}

#[test]
fn romanize_applies_the_table_to_both_sides() {
    let dir = tempdir().unwrap();
    let src = write(dir.path(), "src.txt", "b\u{0101}z\n");
    let tgt = write(dir.path(), "tgt.txt", "\u{0101} x\n");
    let table = write(dir.path(), "table.tsv", "\u{0101}\ta\n");
    let out_src = dir.path().join("out.src");
    let out_tgt = dir.path().join("out.tgt");
    run(pbsmt()
        .arg("romanize")
        .arg("--source-file")
        .arg(&src)
        .arg("--target-file")
        .arg(&tgt)
        .arg("--translit-file")
        .arg(&table)
        .arg("--out-source")
        .arg(&out_src)
        .arg("--out-target")
        .arg(&out_tgt));
    assert_eq!(fs::read_to_string(&out_src).unwrap(), "baz\n");
    assert_eq!(fs::read_to_string(&out_tgt).unwrap(), "a x\n");
}

#[test]
fn bpe_segments_round_trip() {
    let dir = tempdir().unwrap();
    let text = "lower lowest newer newest wider widest\n".repeat(4);
    let input = write(dir.path(), "text.txt", &text);
    let model = dir.path().join("bpe.model");
    run(pbsmt()
        .args(["bpe-train", "--bpe-merges", "50", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&model));
    let segmented = dir.path().join("seg.txt");
    run(pbsmt()
        .arg("bpe-apply")
        .arg("--model")
        .arg(&model)
        .arg("--input")
        .arg(&input)
        .arg("--out")
        .arg(&segmented));
    for (seg, orig) in fs::read_to_string(&segmented).unwrap().lines().zip(text.lines()) {
        let rebuilt = seg
            .split_whitespace()
            .collect::<String>()
            .replace("</w>", " ");
        assert_eq!(rebuilt.trim_end(), orig);
    }
}

#[test]
fn config_file_sets_defaults_and_flags_override_it() {
    let dir = tempdir().unwrap();
    let text = copy_corpus(12);
    let lm_text = write(dir.path(), "lm.txt", &text);
    let config = write(
        dir.path(),
        "pipeline.conf",
        &format!("[model]\nlm_order = 2\nlm_text_file = {}\n", lm_text.display()),
    );
    let from_config = dir.path().join("order2.arpa");
    run(pbsmt()
        .arg("train-lm")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&from_config));
    let arpa = fs::read_to_string(&from_config).unwrap();
    assert!(arpa.contains("\\2-grams:"));
    assert!(!arpa.contains("\\3-grams:"));
    let overridden = dir.path().join("order3.arpa");
    run(pbsmt()
        .arg("train-lm")
        .arg("--config")
        .arg(&config)
        .args(["--lm-order", "3"])
        .arg("--out")
        .arg(&overridden));
    assert!(fs::read_to_string(&overridden).unwrap().contains("\\3-grams:"));
}

#[test]
fn tune_writes_a_loadable_weights_file() {
    let art = build_artifacts();
    let tuned = art.dir.path().join("tuned.weights");
    run(pbsmt()
        .arg("tune")
        .arg("--phrase-table")
        .arg(&art.phrase_table)
        .arg("--lm")
        .arg(&art.lm)
        .args(["--iterations", "1", "--source-file"])
        .arg(&art.source)
        .arg("--target-file")
        .arg(&art.source)
        .arg("--out")
        .arg(&tuned));
    let text = fs::read_to_string(&tuned).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().any(|l| l.starts_with("lm = ")));
    // The tuned file must feed straight back into translate.
    let input = write(art.dir.path(), "in.txt", "w0 w3 w6\n");
    let out_path = art.dir.path().join("out.txt");
    run(pbsmt()
        .arg("translate")
        .arg("--phrase-table")
        .arg(&art.phrase_table)
        .arg("--lm")
        .arg(&art.lm)
        .arg("--weights-file")
        .arg(&tuned)
        .arg("--input")
        .arg(&input)
        .arg("--out")
        .arg(&out_path));
    assert_eq!(fs::read_to_string(&out_path).unwrap(), "w0 w3 w6\n");
}

#[test]
fn crossval_writes_the_per_fold_report() {
    let dir = tempdir().unwrap();
    let text = copy_corpus(24);
    let src = write(dir.path(), "src.txt", &text);
    let tgt = write(dir.path(), "tgt.txt", &text);
    let csv_path = dir.path().join("report.csv");
    let out = run(pbsmt()
        .arg("crossval")
        .arg("--source-file")
        .arg(&src)
        .arg("--target-file")
        .arg(&tgt)
        .args(["--folds", "2", "--em-iterations", "3", "--lm-order", "2"])
        .arg("--out")
        .arg(&csv_path));
    let csv = fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "variant,fold,bleu");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("baseline,1,"));
    assert!(lines[3].starts_with("baseline,mean,"));
    assert!(stderr(&out).contains("baseline"));
}

#[test]
fn experiment_honors_the_variant_flag() {
    let dir = tempdir().unwrap();
    let text = copy_corpus(24);
    let src = write(dir.path(), "src.txt", &text);
    let tgt = write(dir.path(), "tgt.txt", &text);
    let csv_path = dir.path().join("report.csv");
    run(pbsmt()
        .arg("experiment")
        .arg("--source-file")
        .arg(&src)
        .arg("--target-file")
        .arg(&tgt)
        .args(["--variant", "inverted", "--folds", "2", "--em-iterations", "3", "--lm-order", "2"])
        .arg("--out")
        .arg(&csv_path));
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("variant,fold,bleu\ninverted,1,"));
    assert!(csv.contains("inverted,mean,"));
}

#[test]
fn help_lists_every_subcommand() {
    let out = run(pbsmt().arg("--help"));
    let text = stdout(&out);
    for name in [
        "preprocess",
        "filter",
        "analyze-lengths",
        "romanize",
        "invert",
        "bpe-train",
        "bpe-apply",
        "align",
        "extract-phrases",
        "train-lm",
        "translate",
        "tune",
        "bleu",
        "crossval",
        "experiment",
    ] {
        assert!(text.contains(name), "missing {name} in help");
    }
}
