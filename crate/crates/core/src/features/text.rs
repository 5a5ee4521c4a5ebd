use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use super::porter;

/// Lowercases, splits on non-alphanumeric runs, drops pure-digit tokens and
/// stopwords, then stems what remains. Order is preserved.
pub fn tokenize_normalize(text: &str, stopwords: &BTreeSet<String>) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !t.chars().all(|c| c.is_ascii_digit()))
        .filter(|t| !stopwords.contains(t))
        .map(|t| porter::stem(&t))
        .collect()
}

/// Lowercase alphanumeric tokens without stemming or stopword removal.
pub fn raw_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

static ENUMERATOR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(?:\d+(?:\.\d+)*[.)]?|[IVXLCDMivxlcdm]+[.)]|[A-Za-z][.)])(?:\s+|$)").unwrap()
});

/// Removes a leading section enumerator ("3", "3.2", "IV.", "A)").
pub fn strip_index_numbers(title: &str) -> String {
    match ENUMERATOR.find(title) {
        Some(m) => title[m.end()..].to_string(),
        None => title.to_string(),
    }
}

static SENTENCE_END: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[.?!]\s+\p{Lu}").unwrap());

/// Heuristic sentence splitter: a break follows `.`, `?` or `!` when the
/// next non-space character is uppercase.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    for m in SENTENCE_END.find_iter(text) {
        let end = m.start() + 1;
        let s = text[start..end].trim();
        if !s.is_empty() {
            out.push(s.to_string());
        }
        // The uppercase letter begins the next sentence.
        let last_char = m.as_str().chars().last().map(char::len_utf8).unwrap_or(1);
        start = m.end() - last_char;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}
