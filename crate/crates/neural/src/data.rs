//! Token vocabularies and chapter-window plumbing for the neural models.

use std::collections::{BTreeMap, HashMap};

use chapterfn_core::features::{raw_tokens, split_sentences, strip_index_numbers, Provenance};
use chapterfn_core::{Article, Error, Label, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const PAD: usize = 0;
pub const UNK: usize = 1;

/// Truncation limits applied when chapters are encoded to ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    pub title_tokens: usize,
    pub sentence_tokens: usize,
    pub sentences: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { title_tokens: 15, sentence_tokens: 40, sentences: 30 }
    }
}

/// Lowercased surface tokens to ids. Id 0 is padding, id 1 unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenVocab {
    terms: Vec<String>,
    min_count: usize,
    provenance: Provenance,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TokenVocab {
    /// Fits on titles and contents of `articles`; terms seen fewer than
    /// `min_count` times map to the unknown id. Ids follow frequency, then
    /// lexical order.
    pub fn fit(articles: &[Article], min_count: usize) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for a in articles {
            for c in &a.chapters {
                for t in raw_tokens(&strip_index_numbers(&c.title)).into_iter().chain(raw_tokens(&c.content)) {
                    *counts.entry(t).or_default() += 1;
                }
            }
        }
        let mut terms: Vec<(String, usize)> = counts.into_iter().filter(|(_, n)| *n >= min_count.max(1)).collect();
        terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut v = TokenVocab {
            terms: terms.into_iter().map(|(t, _)| t).collect(),
            min_count,
            provenance: Provenance::from_ids(articles.iter().map(|a| a.id.clone())),
            index: HashMap::new(),
        };
        v.rebuild_index();
        v
    }

    pub fn rebuild_index(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i + 2)).collect();
    }

    /// Number of embedding rows, padding and unknown included.
    pub fn size(&self) -> usize {
        self.terms.len() + 2
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }
}

/// A chapter as token ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedChapter {
    pub title: Vec<usize>,
    pub sentences: Vec<Vec<usize>>,
    pub label: Option<Label>,
}

impl EncodedChapter {
    /// Concatenated sentence tokens.
    pub fn flat(&self) -> Vec<usize> {
        self.sentences.concat()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedArticle {
    pub id: String,
    pub chapters: Vec<EncodedChapter>,
}

/// Truncates each part to its cap. Empty titles and contents become a
/// single padding token so every encoder sees at least one position.
pub fn encode_article(article: &Article, vocab: &TokenVocab, caps: &Caps) -> EncodedArticle {
    let chapters = article
        .chapters
        .iter()
        .map(|c| {
            let mut title = vocab.ids(&raw_tokens(&strip_index_numbers(&c.title)));
            title.truncate(caps.title_tokens);
            if title.is_empty() {
                title.push(PAD);
            }
            let raw_sents = match &c.sentences {
                Some(s) => s.clone(),
                None => split_sentences(&c.content),
            };
            let mut sentences: Vec<Vec<usize>> = raw_sents
                .iter()
                .map(|s| {
                    let mut ids = vocab.ids(&raw_tokens(s));
                    ids.truncate(caps.sentence_tokens);
                    ids
                })
                .filter(|s| !s.is_empty())
                .take(caps.sentences)
                .collect();
            if sentences.is_empty() {
                sentences.push(vec![PAD]);
            }
            EncodedChapter { title, sentences, label: c.label }
        })
        .collect();
    EncodedArticle { id: article.id.clone(), chapters }
}

/// Head and tail proportions of a token sequence. Both take `ceil(p·n)`
/// tokens; when they would overlap the tail loses the shared part.
pub fn head_tail_slice<T: Clone>(tokens: &[T], p: f64) -> Result<(Vec<T>, Vec<T>)> {
    if tokens.is_empty() {
        return Err(Error::InvalidInput("head_tail_slice on an empty token list".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!("slice proportion {p} outside (0, 1]")));
    }
    let n = tokens.len();
    let k = ((p * n as f64).ceil() as usize).min(n);
    let head = tokens[..k].to_vec();
    let tail_start = (n - k).max(k);
    Ok((head, tokens[tail_start..].to_vec()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Previous,
    Next,
    Both,
}

impl Direction {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "previous" | "prev" => Ok(Direction::Previous),
            "next" => Ok(Direction::Next),
            "both" | "previous+next" => Ok(Direction::Both),
            other => Err(Error::Config(format!("unknown direction `{other}` (previous, next, both)"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Previous => "previous",
            Direction::Next => "next",
            Direction::Both => "both",
        }
    }
}

/// Chapter indices of a window in article order; `None` marks padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub slots: Vec<Option<usize>>,
    /// Position of the current chapter within `slots`.
    pub current: usize,
}

/// Window around 0-based chapter `i` of an article with `n` chapters.
pub fn context_window(n: usize, i: usize, w: usize, direction: Direction) -> Window {
    assert!(i < n, "chapter index {i} out of range for {n} chapters");
    let before = if direction == Direction::Next { 0 } else { w };
    let after = if direction == Direction::Previous { 0 } else { w };
    let slots = (0..before + 1 + after)
        .map(|k| {
            let j = i as isize + k as isize - before as isize;
            (j >= 0 && (j as usize) < n).then_some(j as usize)
        })
        .collect();
    Window { slots, current: before }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReorderMode {
    ArticleOrder,
    CurrentFirstContextOrdered,
    CurrentFirstContextShuffled,
}

impl ReorderMode {
    pub const ALL: [ReorderMode; 3] = [
        ReorderMode::ArticleOrder,
        ReorderMode::CurrentFirstContextOrdered,
        ReorderMode::CurrentFirstContextShuffled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReorderMode::ArticleOrder => "article_order",
            ReorderMode::CurrentFirstContextOrdered => "current_first_context_ordered",
            ReorderMode::CurrentFirstContextShuffled => "current_first_context_shuffled",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ReorderMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown order mode `{s}`")))
    }
}

/// Reorders a window. The shuffled mode draws its permutation from `seed`.
pub fn reorder_context(window: &Window, mode: ReorderMode, seed: u64) -> Window {
    if mode == ReorderMode::ArticleOrder {
        return window.clone();
    }
    let mut rest: Vec<Option<usize>> = window
        .slots
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != window.current)
        .map(|(_, s)| *s)
        .collect();
    if mode == ReorderMode::CurrentFirstContextShuffled {
        rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut slots = vec![window.slots[window.current]];
    slots.extend(rest);
    Window { slots, current: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chapterfn_core::Chapter;

    #[test]
    fn head_tail_examples() {
        let t: Vec<usize> = (1..=100).collect();
        let (h, tl) = head_tail_slice(&t, 0.1).unwrap();
        assert_eq!(h, (1..=10).collect::<Vec<_>>());
        assert_eq!(tl, (91..=100).collect::<Vec<_>>());
        let t: Vec<usize> = (1..=10).collect();
        let (h, tl) = head_tail_slice(&t, 0.5).unwrap();
        assert_eq!((h, tl), ((1..=5).collect(), (6..=10).collect()));
        let (h, tl) = head_tail_slice(&[1, 2, 3], 0.5).unwrap();
        assert_eq!((h, tl), (vec![1, 2], vec![3]));
        assert!(head_tail_slice::<usize>(&[], 0.1).is_err());
        let (h, tl) = head_tail_slice(&[1, 2, 3, 4, 5], 0.8).unwrap();
        assert_eq!((h, tl), (vec![1, 2, 3, 4], vec![5]));
    }

    #[test]
    fn window_examples() {
        assert_eq!(context_window(4, 0, 1, Direction::Both).slots, vec![None, Some(0), Some(1)]);
        let w = context_window(10, 5, 3, Direction::Previous);
        assert_eq!(w.slots, vec![Some(2), Some(3), Some(4), Some(5)]);
        assert_eq!(w.current, 3);
        let w = context_window(1, 0, 2, Direction::Both);
        assert_eq!(w.slots, vec![None, None, Some(0), None, None]);
        assert_eq!(context_window(3, 2, 1, Direction::Next).slots, vec![Some(2), None]);
        assert_eq!(context_window(3, 1, 0, Direction::Both).slots, vec![Some(1)]);
    }

    #[test]
    fn reorder_examples() {
        let w = context_window(3, 0, 1, Direction::Both);
        assert_eq!(reorder_context(&w, ReorderMode::ArticleOrder, 0), w);
        let r = reorder_context(&w, ReorderMode::CurrentFirstContextOrdered, 0);
        assert_eq!((r.slots, r.current), (vec![Some(0), None, Some(1)], 0));
        let big = context_window(9, 4, 3, Direction::Both);
        let a = reorder_context(&big, ReorderMode::CurrentFirstContextShuffled, 11);
        let b = reorder_context(&big, ReorderMode::CurrentFirstContextShuffled, 11);
        assert_eq!(a, b);
        assert_eq!(a.slots[0], Some(4));
        let mut sorted: Vec<_> = a.slots.clone();
        sorted.sort();
        assert_eq!(sorted, (1..8).map(Some).collect::<Vec<_>>());
    }

    #[test]
    fn vocab_reserves_pad_and_unknown() {
        let a = Article {
            id: "a".into(),
            year: None,
            venue: None,
            chapters: vec![Chapter::new(1, "2 Related Work", "Work work. Prior art")],
        };
        let v = TokenVocab::fit(std::slice::from_ref(&a), 1);
        assert_eq!(v.id("work"), 2);
        assert_eq!(v.id("zzz"), UNK);
        assert_eq!(v.size(), 6);
        let e = encode_article(&a, &v, &Caps::default());
        assert_eq!(e.chapters[0].title, vec![v.id("related"), 2]);
        assert_eq!(e.chapters[0].sentences.len(), 2);
        let empty = Article { chapters: vec![Chapter::new(1, "", "")], ..a };
        let e = encode_article(&empty, &v, &Caps::default());
        assert_eq!((e.chapters[0].title.clone(), e.chapters[0].sentences.clone()), (vec![PAD], vec![vec![PAD]]));
    }
}
