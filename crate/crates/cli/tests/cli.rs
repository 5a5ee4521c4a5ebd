//! End-to-end runs of the `chapterfn` binary on small synthetic corpora.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL_NEURAL: &str = "\
[synth]
articles = 30

[neural]
max_epochs = 2
patience = 1
lstm_hidden = 6
embed_dim = 6
cnn_filters = 4
";

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        Work { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn s(&self, rel: &str) -> String {
        self.path(rel).to_string_lossy().into_owned()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_chapterfn")).args(args).output().unwrap()
    }

    fn ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        out
    }

    fn write(&self, rel: &str, text: &str) -> String {
        std::fs::write(self.path(rel), text).unwrap();
        self.s(rel)
    }

    fn read(&self, rel: &str) -> String {
        std::fs::read_to_string(self.path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
    }

    /// Generates a corpus of `articles` under `dir` and returns its path.
    fn corpus(&self, dir: &str, articles: usize, extra: &[&str]) -> String {
        let (out, n) = (self.s(dir), articles.to_string());
        let mut args = vec!["--out", out.as_str(), "synth", "--articles", n.as_str()];
        args.extend_from_slice(extra);
        self.ok(&args);
        self.s(&format!("{dir}/corpus.jsonl"))
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn synth_writes_corpus_meta_and_sidecar() {
    let w = Work::new();
    let out = w.ok(&["--out", &w.s("c"), "--seed", "5", "synth", "--articles", "12"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed: 5"));
    assert_eq!(w.read("c/corpus.jsonl").lines().count(), 12);
    assert!(w.read("c/corpus.jsonl.meta.json").contains("\"synth\""));
    assert!(Path::new(&w.s("c/corpus.sidecar.json")).exists());
    w.ok(&["--out", &w.s("x"), "synth", "--articles", "3", "--format", "xml"]);
    assert!(w.read("x/corpus.xml").contains("<article"));
}

#[test]
fn ingest_normalizes_xml_to_jsonl() {
    let w = Work::new();
    w.ok(&["--out", &w.s("x"), "synth", "--articles", "4", "--format", "xml"]);
    w.ok(&["--out", &w.s("n"), "ingest", "--in", &w.s("x/corpus.xml")]);
    w.ok(&["--out", &w.s("j"), "synth", "--articles", "4"]);
    assert_eq!(w.read("n/corpus.normalized.jsonl"), w.read("j/corpus.jsonl"));
}

#[test]
fn stats_and_timeseries_tables() {
    let w = Work::new();
    let corpus = w.corpus("c", 20, &[]);
    w.ok(&["--out", &w.s("o"), "stats", "--in", &corpus]);
    let stats = w.read("o/stats.csv");
    assert!(stats.starts_with("# command: stats"), "{stats}");
    assert!(!data_rows(&stats).is_empty());
    w.ok(&["--out", &w.s("o"), "timeseries", "--in", &corpus]);
    for kind in ["proportion", "avg_frequency"] {
        assert!(!data_rows(&w.read(&format!("o/timeseries_{kind}.csv"))).is_empty());
    }
}

#[test]
fn kappa_of_identical_annotations_is_one() {
    let w = Work::new();
    let corpus = w.corpus("c", 6, &[]);
    w.ok(&["--out", &w.s("o"), "kappa", "--a", &corpus, "--b", &corpus]);
    let row = data_rows(&w.read("o/kappa.csv"))[0].to_string();
    assert!(row.ends_with(",1.000000000"), "{row}");

    let other = w.corpus("d", 7, &[]);
    assert_eq!(code(&w.run(&["--out", &w.s("o"), "kappa", "--a", &corpus, "--b", &other])), 3);
}

#[test]
fn featurize_writes_vocabulary_and_vectors() {
    let w = Work::new();
    let corpus = w.corpus("c", 10, &[]);
    w.ok(&["--out", &w.s("o"), "featurize", "--in", &corpus, "--field", "title", "--chars", "loc"]);
    assert!(!data_rows(&w.read("o/vocab.csv")).is_empty());
    assert!(!data_rows(&w.read("o/vectors.csv")).is_empty());
}

#[test]
fn train_evaluate_and_predict_respect_training_set() {
    let w = Work::new();
    let train = w.corpus("train", 20, &[]);
    let cfg = w.write("held.toml", "[synth]\nid_prefix = \"T\"\n");
    let held = w.corpus("held", 8, &["--config", &cfg, "--seed", "99"]);

    w.ok(&["--out", &w.s("m"), "train", "--in", &train, "--family", "lr", "--field", "title"]);
    let model = w.s("m/model.bin");
    assert_eq!(code(&w.run(&["--out", &w.s("e"), "evaluate", "--model", &model, "--in", &train])), 3, "training articles must be refused");
    w.ok(&["--out", &w.s("e"), "evaluate", "--model", &model, "--in", &held]);
    assert!(!data_rows(&w.read("e/evaluate.csv")).is_empty());

    let pred = w.s("p/pred.jsonl");
    assert_eq!(code(&w.run(&["--out", &pred, "predict", "--model", &model, "--in", &held])), 3, "labeled input needs --force");
    w.ok(&["--out", &pred, "predict", "--model", &model, "--in", &held, "--force"]);
    assert_eq!(w.read("p/pred.jsonl").lines().count(), 8);
    assert!(Path::new(&w.s("p/pred.jsonl.meta.json")).exists());
}

#[test]
fn opentest_and_crf_cross_validation() {
    let w = Work::new();
    let train = w.corpus("train", 20, &[]);
    let cfg = w.write("held.toml", "[synth]\nid_prefix = \"T\"\n");
    let held = w.corpus("held", 6, &["--config", &cfg]);
    w.ok(&["--out", &w.s("o"), "opentest", "--train", &train, "--test", &held, "--family", "nb", "--field", "title"]);
    assert!(!data_rows(&w.read("o/opentest.csv")).is_empty());
    w.ok(&["--out", &w.s("o"), "cv", "--in", &train, "--family", "crf"]);
    assert!(w.read("o/cv.csv").lines().any(|l| l.contains(",all,")));
}

#[test]
fn chi_analysis_writes_pareto_and_context_tables() {
    let w = Work::new();
    let corpus = w.corpus("c", 30, &[]);
    w.ok(&["--out", &w.s("o"), "chi-analysis", "--in", &corpus, "--top-k", "20", "--drop-top", "1"]);
    let pareto = w.read("o/chi_weighted.csv");
    let last = data_rows(&pareto).last().unwrap().to_string();
    let share: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(share, 1.0, "{last}");
    assert!(!data_rows(&w.read("o/chi_context.csv")).is_empty());
}

#[test]
fn experiment_rows_can_be_filtered() {
    let w = Work::new();
    let corpus = w.corpus("c", 30, &[]);
    w.ok(&["--out", &w.s("o"), "experiment", "ML-title", "--in", &corpus, "--row", "NB"]);
    let csv = w.read("o/ML-title.csv");
    assert!(csv.contains("ML-title/NB,") && !csv.contains("ML-title/LR,"), "{csv}");

    let cfg = w.write("small.toml", SMALL_NEURAL);
    w.ok(&["--config", &cfg, "--out", &w.s("d"), "experiment", "DL-title-ext1", "--in", &corpus, "--window", "1", "--direction", "previous"]);
    let csv = w.read("d/DL-title-ext1.csv");
    let rows: std::collections::BTreeSet<&str> = data_rows(&csv).iter().map(|l| l.split(',').next().unwrap()).collect();
    assert!(!rows.is_empty() && rows.iter().all(|r| r.contains("Around1 (previous)")), "{rows:?}");

    let none = w.run(&["--out", &w.s("o"), "experiment", "ML-title", "--in", &corpus, "--row", "nope"]);
    assert_eq!(code(&none), 2);
}

#[test]
fn ablate_order_reports_every_mode() {
    let w = Work::new();
    let cfg = w.write("small.toml", SMALL_NEURAL);
    let corpus = w.corpus("c", 30, &[]);
    w.ok(&["--config", &cfg, "--out", &w.s("o"), "ablate-order", "--in", &corpus, "--window", "1"]);
    let csv = w.read("o/ablate_order.csv");
    for mode in ["article_order", "current_first_context_ordered", "current_first_context_shuffled"] {
        assert!(data_rows(&csv).iter().any(|l| l.contains(mode)), "{mode} missing from {csv}");
    }
}

#[test]
fn gradcheck_passes() {
    let w = Work::new();
    w.ok(&["--out", &w.s("o"), "gradcheck", "--trials", "5"]);
    assert_eq!(data_rows(&w.read("o/gradcheck.csv")).len(), 12);
}

#[test]
fn configuration_errors_exit_two() {
    let w = Work::new();
    let bad = w.write("bad.toml", "[neural]\nlstm_hiden = 3\n");
    assert_eq!(code(&w.run(&["--config", &bad, "synth"])), 2);
    assert_eq!(code(&w.run(&["--config", &w.s("missing.toml"), "synth"])), 2);
    assert_eq!(code(&w.run(&["--jobs", "0", "synth"])), 2);
    let corpus = w.corpus("c", 5, &[]);
    assert_eq!(code(&w.run(&["--out", &w.s("o"), "train", "--in", &corpus, "--family", "bogus"])), 2);
}

#[test]
fn malformed_input_is_a_data_error() {
    let w = Work::new();
    let bad = w.write("bad.jsonl", "{\"id\": 1, \"chapters\": [\n");
    assert_eq!(code(&w.run(&["--out", &w.s("o"), "stats", "--in", &bad])), 3);
}
