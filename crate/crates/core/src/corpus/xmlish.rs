//! A small XML-like adapter:
//!
//! ```text
//! <corpus>
//!   <article id="P01" year="2019" venue="ACL">
//!     <chapter ordinal="1" title="Introduction" label="introduction">text</chapter>
//!     <chapter title="Method" n_citations="2"><s>One.</s><s>Two.</s></chapter>
//!   </article>
//! </corpus>
//! ```
//!
//! `ordinal` defaults to the element position. `<s>` children, when present,
//! become the chapter's sentences and the content is their space-joined text.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use super::{count_citations, count_figtables, finish_article, Article, Chapter, ParseMode, ParseOutcome};
use crate::error::{Error, Result};

#[derive(Debug)]
enum Token {
    Open {
        name: String,
        attrs: BTreeMap<String, String>,
        self_closing: bool,
        line: usize,
    },
    Close {
        name: String,
        line: usize,
    },
    Text(String),
}

fn unescape(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tokenize(text: &str) -> std::result::Result<Vec<Token>, (usize, String)> {
    let mut out = Vec::new();
    let mut rest = text;
    let mut line = 1usize;
    while !rest.is_empty() {
        if let Some(start) = rest.find('<') {
            if start > 0 {
                out.push(Token::Text(unescape(&rest[..start])));
                line += rest[..start].matches('\n').count();
            }
            let after = &rest[start..];
            let end = after
                .find('>')
                .ok_or_else(|| (line, "unterminated tag".to_string()))?;
            let tag = &after[1..end];
            let tag_line = line;
            line += tag.matches('\n').count();
            rest = &after[end + 1..];
            if tag.starts_with('?') || tag.starts_with('!') {
                continue;
            }
            if let Some(name) = tag.strip_prefix('/') {
                out.push(Token::Close {
                    name: name.trim().to_string(),
                    line: tag_line,
                });
                continue;
            }
            let (body, self_closing) = match tag.strip_suffix('/') {
                Some(b) => (b, true),
                None => (tag, false),
            };
            let body = body.trim();
            let name_end = body.find(char::is_whitespace).unwrap_or(body.len());
            let name = body[..name_end].to_string();
            let attrs = parse_attrs(&body[name_end..]).map_err(|m| (tag_line, m))?;
            out.push(Token::Open {
                name,
                attrs,
                self_closing,
                line: tag_line,
            });
        } else {
            out.push(Token::Text(unescape(rest)));
            break;
        }
    }
    Ok(out)
}

fn parse_attrs(mut s: &str) -> std::result::Result<BTreeMap<String, String>, String> {
    let mut attrs = BTreeMap::new();
    loop {
        s = s.trim_start();
        if s.is_empty() {
            return Ok(attrs);
        }
        let eq = s.find('=').ok_or_else(|| format!("malformed attribute near `{s}`"))?;
        let key = s[..eq].trim().to_string();
        let v = s[eq + 1..].trim_start();
        let quote = v
            .chars()
            .next()
            .filter(|c| *c == '"' || *c == '\'')
            .ok_or_else(|| format!("attribute `{key}` is not quoted"))?;
        let close = v[1..]
            .find(quote)
            .ok_or_else(|| format!("attribute `{key}` is not terminated"))?;
        attrs.insert(key, unescape(&v[1..1 + close]));
        s = &v[close + 2..];
    }
}

struct Builder<'a> {
    path: &'a Path,
    mode: ParseMode,
    out: ParseOutcome,
    seen: HashSet<String>,
}

impl Builder<'_> {
    fn fail(&mut self, line: usize, msg: String) -> Result<()> {
        match self.mode {
            ParseMode::Strict => Err(Error::Parse {
                path: self.path.to_path_buf(),
                line,
                msg,
            }),
            ParseMode::Lenient => {
                self.out
                    .warnings
                    .push(format!("line {line}: skipping malformed element: {msg}"));
                Ok(())
            }
        }
    }
}

fn num<T: std::str::FromStr>(attrs: &BTreeMap<String, String>, key: &str) -> std::result::Result<Option<T>, String> {
    attrs
        .get(key)
        .map(|v| v.trim().parse::<T>().map_err(|_| format!("attribute `{key}` is not a valid number: `{v}`")))
        .transpose()
}

fn build_chapter(
    attrs: &BTreeMap<String, String>,
    position: usize,
    text: String,
    sentences: Vec<String>,
) -> std::result::Result<Chapter, String> {
    let ordinal = num::<u32>(attrs, "ordinal")?.unwrap_or(position as u32);
    let label = attrs
        .get("label")
        .map(|l| l.parse().map_err(|e: Error| e.to_string()))
        .transpose()?;
    let (content, sentences) = if sentences.is_empty() {
        (text.trim().to_string(), None)
    } else {
        (sentences.join(" "), Some(sentences))
    };
    Ok(Chapter {
        ordinal,
        title: attrs.get("title").cloned().unwrap_or_default(),
        citation_count: num(attrs, "n_citations")?.unwrap_or_else(|| count_citations(&content)),
        figtable_count: num(attrs, "n_figtables")?.unwrap_or_else(|| count_figtables(&content)),
        content,
        sentences,
        label,
    })
}

pub fn parse_xmlish_str(text: &str, path: &Path, mode: ParseMode) -> Result<ParseOutcome> {
    let tokens = tokenize(text).map_err(|(line, msg)| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    })?;
    let mut b = Builder {
        path,
        mode,
        out: ParseOutcome::default(),
        seen: HashSet::new(),
    };
    let mut it = tokens.into_iter().peekable();
    while let Some(tok) = it.next() {
        let Token::Open { name, attrs, self_closing, line } = tok else { continue };
        if name != "article" {
            continue;
        }
        let Some(id) = attrs.get("id").cloned() else {
            b.fail(line, "article element without `id`".into())?;
            continue;
        };
        let mut article = Article {
            id,
            year: None,
            venue: attrs.get("venue").cloned(),
            chapters: Vec::new(),
        };
        match num::<i32>(&attrs, "year") {
            Ok(y) => article.year = y,
            Err(m) => {
                b.fail(line, m)?;
                continue;
            }
        }
        let mut error: Option<(usize, String)> = None;
        if !self_closing {
            // Walk the article body.
            let mut closed = false;
            while let Some(tok) = it.next() {
                match tok {
                    Token::Close { name, .. } if name == "article" => {
                        closed = true;
                        break;
                    }
                    Token::Open { name, attrs, self_closing, line } if name == "chapter" => {
                        let mut text = String::new();
                        let mut sentences = Vec::new();
                        if !self_closing {
                            let mut in_sentence: Option<String> = None;
                            let mut done = false;
                            for tok in it.by_ref() {
                                match tok {
                                    Token::Text(t) => match in_sentence.as_mut() {
                                        Some(s) => s.push_str(&t),
                                        None => text.push_str(&t),
                                    },
                                    Token::Open { name, .. } if name == "s" => {
                                        in_sentence = Some(String::new())
                                    }
                                    Token::Close { name, .. } if name == "s" => {
                                        if let Some(s) = in_sentence.take() {
                                            sentences.push(s.trim().to_string());
                                        }
                                    }
                                    Token::Close { name, .. } if name == "chapter" => {
                                        done = true;
                                        break;
                                    }
                                    Token::Close { name, line } | Token::Open { name, line, .. } => {
                                        error.get_or_insert((line, format!("unexpected element `{name}` inside chapter")));
                                    }
                                }
                            }
                            if !done {
                                error.get_or_insert((line, "unterminated chapter element".into()));
                            }
                        }
                        match build_chapter(&attrs, article.chapters.len() + 1, text, sentences) {
                            Ok(ch) => article.chapters.push(ch),
                            Err(m) => {
                                error.get_or_insert((line, m));
                            }
                        }
                    }
                    Token::Open { name, line, .. } | Token::Close { name, line } => {
                        error.get_or_insert((line, format!("unexpected element `{name}` inside article")));
                    }
                    Token::Text(_) => {}
                }
            }
            if !closed {
                error.get_or_insert((line, "unterminated article element".into()));
            }
        }
        if let Some((l, m)) = error {
            b.fail(l, m)?;
            continue;
        }
        match finish_article(article, &mut b.seen) {
            Ok(a) => b.out.articles.push(a),
            Err(e) => b.fail(line, e.to_string())?,
        }
    }
    Ok(b.out)
}

pub fn to_xmlish_string(articles: &[Article]) -> String {
    let mut s = String::from("<corpus>\n");
    for a in articles {
        s.push_str(&format!("  <article id=\"{}\"", escape(&a.id)));
        if let Some(y) = a.year {
            s.push_str(&format!(" year=\"{y}\""));
        }
        if let Some(v) = &a.venue {
            s.push_str(&format!(" venue=\"{}\"", escape(v)));
        }
        s.push_str(">\n");
        for c in &a.chapters {
            s.push_str(&format!(
                "    <chapter ordinal=\"{}\" title=\"{}\" n_citations=\"{}\" n_figtables=\"{}\"",
                c.ordinal,
                escape(&c.title),
                c.citation_count,
                c.figtable_count
            ));
            if let Some(l) = c.label {
                s.push_str(&format!(" label=\"{l}\""));
            }
            s.push('>');
            match &c.sentences {
                Some(sents) => {
                    for sent in sents {
                        s.push_str(&format!("<s>{}</s>", escape(sent)));
                    }
                }
                None => s.push_str(&escape(&c.content)),
            }
            s.push_str("</chapter>\n");
        }
        s.push_str("  </article>\n");
    }
    s.push_str("</corpus>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    #[test]
    fn parses_chapters_and_sentences() {
        let text = r#"<corpus>
<article id="p1" year="2019" venue="ACL">
  <chapter title="1 Introduction" label="introduction">We study [1] &amp; more.</chapter>
  <chapter title="Method" label="method"><s>First one.</s> <s>Second, see Table 2.</s></chapter>
</article>
</corpus>"#;
        let out = parse_xmlish_str(text, Path::new("x.xml"), ParseMode::Strict).unwrap();
        let a = &out.articles[0];
        assert_eq!(a.year, Some(2019));
        assert_eq!(a.chapters.len(), 2);
        assert_eq!(a.chapters[0].content, "We study [1] & more.");
        assert_eq!(a.chapters[0].citation_count, 1);
        assert_eq!(a.chapters[1].label, Some(Label::Method));
        assert_eq!(a.chapters[1].sentences.as_ref().unwrap().len(), 2);
        assert_eq!(a.chapters[1].figtable_count, 1);
    }

    #[test]
    fn malformed_element_reports_line() {
        let text = "<corpus>\n<article id=\"a\">\n<chapter title=\"x\" label=\"bogus\">t</chapter>\n</article>\n</corpus>";
        match parse_xmlish_str(text, Path::new("x.xml"), ParseMode::Strict) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let out = parse_xmlish_str(text, Path::new("x.xml"), ParseMode::Lenient).unwrap();
        assert!(out.articles.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }
}
