use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{count_citations, count_figtables, finish_article, Article, Chapter, Label, ParseMode, ParseOutcome};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ArticleRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    venue: Option<String>,
    chapters: Vec<ChapterRecord>,
    #[serde(flatten, skip_serializing)]
    extra: Map<String, Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChapterRecord {
    ordinal: u32,
    title: String,
    content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sentences: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_citations: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_figtables: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<Label>,
    #[serde(flatten, skip_serializing)]
    extra: Map<String, Value>,
}

impl ArticleRecord {
    fn into_article(self, warnings: &mut Vec<String>, line: usize) -> Article {
        for key in self.extra.keys() {
            warnings.push(format!("line {line}: ignoring unknown article key `{key}`"));
        }
        let chapters = self
            .chapters
            .into_iter()
            .map(|c| {
                for key in c.extra.keys() {
                    warnings.push(format!(
                        "line {line}: chapter {}: ignoring unknown key `{key}`",
                        c.ordinal
                    ));
                }
                Chapter {
                    ordinal: c.ordinal,
                    citation_count: c.n_citations.unwrap_or_else(|| count_citations(&c.content)),
                    figtable_count: c.n_figtables.unwrap_or_else(|| count_figtables(&c.content)),
                    title: c.title,
                    content: c.content,
                    sentences: c.sentences,
                    label: c.label,
                }
            })
            .collect();
        Article {
            id: self.id,
            year: self.year,
            venue: self.venue,
            chapters,
        }
    }

    fn from_article(a: &Article) -> Self {
        ArticleRecord {
            id: a.id.clone(),
            year: a.year,
            venue: a.venue.clone(),
            chapters: a
                .chapters
                .iter()
                .map(|c| ChapterRecord {
                    ordinal: c.ordinal,
                    title: c.title.clone(),
                    content: c.content.clone(),
                    sentences: c.sentences.clone(),
                    n_citations: Some(c.citation_count),
                    n_figtables: Some(c.figtable_count),
                    label: c.label,
                    extra: Map::new(),
                })
                .collect(),
            extra: Map::new(),
        }
    }
}

/// Parses JSONL text, one article per non-blank line. `path` is only used
/// in error messages.
pub fn parse_jsonl_str(text: &str, path: &Path, mode: ParseMode) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut local_warnings = Vec::new();
        let parsed = serde_json::from_str::<ArticleRecord>(line)
            .map_err(|e| e.to_string())
            .map(|r| r.into_article(&mut local_warnings, lineno))
            .and_then(|a| finish_article(a, &mut seen).map_err(|e| e.to_string()));
        match parsed {
            Ok(article) => {
                out.warnings.extend(local_warnings);
                out.articles.push(article);
            }
            Err(msg) => match mode {
                ParseMode::Strict => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno,
                        msg,
                    })
                }
                ParseMode::Lenient => {
                    out.warnings
                        .push(format!("line {lineno}: skipping malformed record: {msg}"));
                }
            },
        }
    }
    Ok(out)
}

pub fn to_jsonl_string(articles: &[Article]) -> String {
    let mut s = String::new();
    for a in articles {
        s.push_str(&serde_json::to_string(&ArticleRecord::from_article(a)).expect("serializable"));
        s.push('\n');
    }
    s
}

pub fn write_jsonl(path: &Path, articles: &[Article]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(to_jsonl_string(articles).as_bytes())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.jsonl")
    }

    #[test]
    fn three_chapters_in_order() {
        let line = r#"{"id":"x","chapters":[{"ordinal":2,"title":"B","content":"b"},{"ordinal":1,"title":"A","content":"a"},{"ordinal":3,"title":"C","content":"c"}]}"#;
        let out = parse_jsonl_str(line, p(), ParseMode::Strict).unwrap();
        let ords: Vec<u32> = out.articles[0].chapters.iter().map(|c| c.ordinal).collect();
        assert_eq!(ords, vec![1, 2, 3]);
        assert_eq!(out.articles[0].chapters[0].title, "A");
    }

    #[test]
    fn missing_chapters_names_the_line() {
        let text = "{\"id\":\"a\",\"chapters\":[{\"ordinal\":1,\"title\":\"t\",\"content\":\"c\"}]}\n{\"id\":\"b\"}\n";
        let err = parse_jsonl_str(text, p(), ParseMode::Strict).unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("chapters"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn counts_default_to_heuristics_and_explicit_fields_win() {
        let text = r#"{"id":"a","chapters":[{"ordinal":1,"title":"t","content":"see [1,2] and Table 1"},{"ordinal":2,"title":"u","content":"see [1,2]","n_citations":9,"n_figtables":4}]}"#;
        let out = parse_jsonl_str(text, p(), ParseMode::Strict).unwrap();
        let ch = &out.articles[0].chapters;
        assert_eq!((ch[0].citation_count, ch[0].figtable_count), (2, 1));
        assert_eq!((ch[1].citation_count, ch[1].figtable_count), (9, 4));
    }

    #[test]
    fn unknown_keys_warn() {
        let text = r#"{"id":"a","extra":1,"chapters":[{"ordinal":1,"title":"t","content":"c","font":"x"}]}"#;
        let out = parse_jsonl_str(text, p(), ParseMode::Strict).unwrap();
        assert_eq!(out.warnings.len(), 2);
    }

    #[test]
    fn duplicate_ids_and_empty_chapter_lists_are_rejected() {
        let one = r#"{"id":"a","chapters":[{"ordinal":1,"title":"t","content":"c"}]}"#;
        let dup = format!("{one}\n{one}\n");
        assert!(parse_jsonl_str(&dup, p(), ParseMode::Strict).is_err());
        let empty = r#"{"id":"a","chapters":[]}"#;
        assert!(parse_jsonl_str(empty, p(), ParseMode::Strict).is_err());
    }

    #[test]
    fn bad_label_is_a_parse_error() {
        let text = r#"{"id":"a","chapters":[{"ordinal":1,"title":"t","content":"c","label":"results"}]}"#;
        assert!(parse_jsonl_str(text, p(), ParseMode::Strict).is_err());
    }
}
