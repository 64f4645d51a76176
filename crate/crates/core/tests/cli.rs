use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use segtag::corpus::parse_corpus;

fn segtag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segtag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = segtag(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn kv(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn get<'a>(pairs: &'a [(String, String)], key: &str) -> &'a str {
    &pairs.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no {key}")).1
}

#[test]
fn missing_input_names_the_path() {
    let out = segtag(&["train", "--input", "/nonexistent/corpus.txt", "--output", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/corpus.txt"));
}

#[test]
fn eval_hand_examples() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.txt");
    let pred = dir.path().join("pred.txt");
    fs::write(&gold, "a_b/N c/V\n").unwrap();

    fs::write(&pred, "a/N b_c/V\n").unwrap();
    let r = kv(&ok(&["eval", "--gold", s(&gold), "--pred", s(&pred)]));
    assert_eq!(get(&r, "wseg.f1"), "0.00");
    assert_eq!(get(&r, "ptag.f1"), "0.00");

    fs::write(&pred, "a_b/V c/V\n").unwrap();
    let r = kv(&ok(&["eval", "--gold", s(&gold), "--pred", s(&pred)]));
    assert_eq!(get(&r, "wseg.f1"), "100.00");
    assert_eq!(get(&r, "ptag.f1"), "50.00");
    assert_eq!(get(&r, "accuracy"), "50.00");

    let report = dir.path().join("report.txt");
    ok(&["eval", "--gold", s(&gold), "--pred", s(&gold), "--output", s(&report)]);
    let r = kv(&fs::read_to_string(&report).unwrap());
    assert_eq!((get(&r, "wseg.f1"), get(&r, "ptag.f1")), ("100.00", "100.00"));
    assert!(dir.path().join("report.txt.manifest").is_file());
}

#[test]
fn eval_rejects_changed_syllables() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.txt");
    let pred = dir.path().join("pred.txt");
    fs::write(&gold, "a/N\nb_c/V\n").unwrap();
    fs::write(&pred, "a/N\nb_d/V\n").unwrap();
    let out = segtag(&["eval", "--gold", s(&gold), "--pred", s(&pred)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sentence 2"));
}

#[test]
fn train_tag_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("train.txt");
    ok(&["synth", "--output", s(&corpus), "--sentences", "300"]);
    let text = fs::read_to_string(&corpus).unwrap();
    let raw = dir.path().join("raw.txt");
    let first: Vec<&str> = text.lines().take(5).collect();
    let unsegmented: String = first
        .iter()
        .map(|l| {
            let words: Vec<&str> = l.split(' ').map(|t| t.rsplit_once('/').unwrap().0).collect();
            format!("{}\n", words.join(" ").replace('_', " "))
        })
        .collect();
    fs::write(&raw, format!("{unsegmented}\n")).unwrap();

    for strategy in ["joint", "pipeline"] {
        let model = dir.path().join(strategy);
        ok(&[
            "train", "--input", s(&corpus), "--output", s(&model), "--strategy", strategy, "--epochs", "5",
        ]);
        let manifest = fs::read_to_string(model.join("manifest.txt")).unwrap();
        assert!(manifest.starts_with("segtag-manifest 1\n"));
        assert!(manifest.contains("input.sha256="));
        assert!(manifest.contains(".epoch.1.dev_score="));

        let out = ok(&["tag", "--input", s(&raw), "--model", s(&model), "--strategy", strategy]);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[5], "");
        let tagged = parse_corpus(&out).unwrap();
        assert_eq!(tagged.len(), 5);
        for (line, sentence) in unsegmented.lines().zip(&tagged.sentences) {
            let syllables: Vec<String> = sentence
                .words()
                .flat_map(|w| w.syllables().iter().map(|x| x.to_string()))
                .collect();
            assert_eq!(syllables.join(" "), line);
        }

        let bench = ok(&[
            "bench", "--input", s(&corpus), "--model", s(&model), "--strategy", strategy, "--repetitions", "2",
        ]);
        let b = kv(&bench);
        assert_eq!(get(&b, "repetitions"), "2");
        assert_eq!(get(&b, "model_loading"), "excluded");
        assert!(get(&b, "words_per_second").parse::<f64>().unwrap() > 0.0);
    }

    // an empty input tags to empty output
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let out = segtag(&["tag", "--input", s(&empty), "--model", s(&dir.path().join("joint"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());

    // a pipeline model directory has no joint model
    let out = segtag(&["tag", "--input", s(&raw), "--model", s(&dir.path().join("pipeline")), "--strategy", "joint"]);
    assert_eq!(out.status.code(), Some(2));

    // a word tagger in place of the joint model is a mode mismatch
    let swapped = dir.path().join("swapped");
    fs::create_dir(&swapped).unwrap();
    fs::copy(dir.path().join("pipeline/tagger.model"), swapped.join("joint.model")).unwrap();
    let out = segtag(&["tag", "--input", s(&raw), "--model", s(&swapped)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mode mismatch"));
}

#[test]
fn lexicon_training_has_one_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("train.txt");
    ok(&["synth", "--output", s(&corpus), "--sentences", "50"]);
    let model = dir.path().join("m");
    ok(&["train", "--input", s(&corpus), "--output", s(&model), "--backend", "lexicon"]);
    let m = kv(&fs::read_to_string(model.join("manifest.txt")).unwrap());
    assert_eq!(get(&m, "joint.epochs_run"), "1");
    assert!(fs::read_to_string(model.join("joint.model")).unwrap().starts_with("segtag-lexicon\n"));
}

#[test]
fn compare_single_system() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.txt");
    ok(&["synth", "--output", s(&corpus), "--sentences", "200"]);
    let out = dir.path().join("out");
    let table = ok(&[
        "compare", "--input", s(&corpus), "--output", s(&out), "--strategy", "joint", "--backend", "lexicon",
        "--repetitions", "1",
    ]);
    assert!(table.contains("joint-lexicon"));
    let r = kv(&fs::read_to_string(out.join("report.kv")).unwrap());
    assert_eq!(get(&r, "systems"), "1");
    assert_eq!(get(&r, "test.sentences"), "20");
    for f in ["report.txt", "timing.kv", "manifest.txt"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn bad_values_are_user_errors() {
    let out = segtag(&["train", "--input", "x", "--output", "y", "--backend", "crf"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "a/N b\n").unwrap();
    let out = segtag(&["train", "--input", s(&bad), "--output", s(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1, token 2"));
}
