//! Corpus files survive a write/read cycle in both formats, and lenient
//! parsing keeps the good records of a damaged file.

use chapterfn_core::corpus::{parse_corpus, to_jsonl_string, to_xmlish_string, CorpusFormat, ParseMode};
use chapterfn_core::synth::{generate, SynthConfig};

fn corpus() -> Vec<chapterfn_core::Article> {
    generate(&SynthConfig { articles: 25, seed: 11, ..SynthConfig::default() }).unwrap().0
}

#[test]
fn both_formats_round_trip_through_files() {
    let articles = corpus();
    let dir = tempfile::tempdir().unwrap();
    for (format, text) in [(CorpusFormat::Jsonl, to_jsonl_string(&articles)), (CorpusFormat::Xmlish, to_xmlish_string(&articles))] {
        let path = dir.path().join(format!("corpus.{format:?}"));
        std::fs::write(&path, text).unwrap();
        let back = parse_corpus(&path, format, ParseMode::Strict).unwrap();
        assert!(back.warnings.is_empty(), "{:?}", back.warnings);
        assert_eq!(back.articles, articles, "{format:?}");
    }
}

#[test]
fn lenient_mode_skips_only_damaged_lines() {
    let articles = corpus();
    let mut text = to_jsonl_string(&articles[..3]);
    text.push_str("{\"id\": \"broken\", \"chapters\": [\n");
    text.push_str(&to_jsonl_string(&articles[3..5]));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("damaged.jsonl");
    std::fs::write(&path, text).unwrap();

    assert!(parse_corpus(&path, CorpusFormat::Jsonl, ParseMode::Strict).is_err());
    let lenient = parse_corpus(&path, CorpusFormat::Jsonl, ParseMode::Lenient).unwrap();
    assert_eq!(lenient.articles, articles[..5]);
    assert_eq!(lenient.warnings.len(), 1);
}
