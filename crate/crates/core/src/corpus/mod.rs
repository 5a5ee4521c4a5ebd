//! Article corpora: the data model, file formats, citation and figure/table
//! counting, corpus statistics and annotation agreement.

mod counts;
mod jsonl;
mod kappa;
mod label;
mod stats;
mod xmlish;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use counts::{count_citations, count_figtables};
pub use jsonl::{parse_jsonl_str, write_jsonl, to_jsonl_string};
pub use kappa::{cohen_kappa, cohen_kappa_slices, AnnotationPair};
pub use label::{Label, NUM_LABELS};
pub use stats::{corpus_stats, CorpusStats};
pub use xmlish::{parse_xmlish_str, to_xmlish_string};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chapter {
    /// 1-based position in the article.
    pub ordinal: u32,
    pub title: String,
    pub content: String,
    pub sentences: Option<Vec<String>>,
    pub citation_count: u32,
    pub figtable_count: u32,
    pub label: Option<Label>,
}

impl Chapter {
    /// Builds a chapter whose citation and figure/table counts are derived
    /// from the content text.
    pub fn new(ordinal: u32, title: impl Into<String>, content: impl Into<String>) -> Self {
        let content = content.into();
        Chapter {
            ordinal,
            title: title.into(),
            citation_count: count_citations(&content),
            figtable_count: count_figtables(&content),
            content,
            sentences: None,
            label: None,
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub year: Option<i32>,
    pub venue: Option<String>,
    pub chapters: Vec<Chapter>,
}

impl Article {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Error::InvalidArticle {
            id: self.id.clone(),
            msg,
        };
        if self.chapters.is_empty() {
            return Err(Error::EmptyArticle(self.id.clone()));
        }
        for (i, ch) in self.chapters.iter().enumerate() {
            if ch.ordinal as usize != i + 1 {
                return Err(invalid(format!(
                    "chapter ordinals must be 1..{} without gaps, found {} at position {}",
                    self.chapters.len(),
                    ch.ordinal,
                    i + 1
                )));
            }
            if ch.title.trim().is_empty() && ch.content.trim().is_empty() {
                return Err(invalid(format!(
                    "chapter {} has neither a title nor content",
                    ch.ordinal
                )));
            }
        }
        Ok(())
    }

    pub fn is_labeled(&self) -> bool {
        self.chapters.iter().all(|c| c.label.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Xmlish,
}

impl CorpusFormat {
    /// Guesses the format from the file extension; anything but `.xml` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("xml") | Some("xmlish") => CorpusFormat::Xmlish,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "xmlish" | "xml" => Ok(CorpusFormat::Xmlish),
            other => Err(Error::Config(format!("unknown corpus format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub articles: Vec<Article>,
    pub warnings: Vec<String>,
}

pub fn parse_corpus(path: &Path, format: CorpusFormat, mode: ParseMode) -> Result<ParseOutcome> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::Jsonl => parse_jsonl_str(&text, path, mode),
        CorpusFormat::Xmlish => parse_xmlish_str(&text, path, mode),
    }
}

/// Shared post-processing for both formats: ordering, validation and
/// duplicate detection. Returns the error for the offending article, if any.
fn finish_article(
    mut article: Article,
    seen: &mut std::collections::HashSet<String>,
) -> Result<Article> {
    article.chapters.sort_by_key(|c| c.ordinal);
    article.validate()?;
    if !seen.insert(article.id.clone()) {
        return Err(Error::DuplicateId(article.id));
    }
    Ok(article)
}

/// Ids of articles that contain at least one unlabeled chapter.
pub fn unlabeled_article_ids(articles: &[Article]) -> Vec<String> {
    articles
        .iter()
        .filter(|a| !a.is_labeled())
        .map(|a| a.id.clone())
        .collect()
}

pub fn total_chapters(articles: &[Article]) -> usize {
    articles.iter().map(|a| a.chapters.len()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn article(n: usize) -> Article {
        Article {
            id: "a".into(),
            year: None,
            venue: None,
            chapters: (1..=n)
                .map(|i| Chapter::new(i as u32, format!("T{i}"), "x"))
                .collect(),
        }
    }

    #[test]
    fn validation_catches_gaps_and_empty_chapters() {
        assert!(article(3).validate().is_ok());
        let mut a = article(3);
        a.chapters[2].ordinal = 4;
        assert!(a.validate().is_err());
        let mut a = article(1);
        a.chapters[0].title.clear();
        a.chapters[0].content.clear();
        assert!(a.validate().is_err());
        assert!(matches!(article(0).validate(), Err(Error::EmptyArticle(_))));
    }

    #[test]
    fn empty_title_is_allowed_with_content() {
        let mut a = article(1);
        a.chapters[0].title.clear();
        assert!(a.validate().is_ok());
    }
}
