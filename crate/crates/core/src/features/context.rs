use std::collections::{BTreeMap, BTreeSet};

use super::text::{strip_index_numbers, tokenize_normalize};
use super::vocab::{chi_square_2x2, sort_scored};
use crate::corpus::{Article, Label};
use crate::error::{Error, Result};

/// Association between the title terms of the chapter `offset` positions
/// away and whether the anchor chapter belongs to `target`.
///
/// Every labeled chapter with a neighbour at that offset contributes one
/// document (the neighbour's title). Terms are returned by chi-square,
/// highest first.
pub fn context_chi_analysis(
    articles: &[Article],
    target: Label,
    offset: isize,
    stopwords: &BTreeSet<String>,
) -> Result<Vec<(String, f64)>> {
    if offset == 0 {
        return Err(Error::InvalidInput("context offset must be non-zero".into()));
    }
    let present = articles
        .iter()
        .flat_map(|a| &a.chapters)
        .any(|c| c.label == Some(target));
    if !present {
        return Err(Error::AbsentClass(target.to_string()));
    }
    // term -> (docs with term and positive anchor, docs with term and negative anchor)
    let mut counts: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    let (mut n, mut n_pos) = (0u64, 0u64);
    for a in articles {
        for (i, ch) in a.chapters.iter().enumerate() {
            let Some(label) = ch.label else { continue };
            let j = i as isize + offset;
            if j < 0 || j as usize >= a.chapters.len() {
                continue;
            }
            let pos = label == target;
            n += 1;
            n_pos += pos as u64;
            let title = strip_index_numbers(&a.chapters[j as usize].title);
            let terms: BTreeSet<String> = tokenize_normalize(&title, stopwords).into_iter().collect();
            for t in terms {
                let e = counts.entry(t).or_default();
                if pos {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
    }
    let mut out: Vec<(String, f64)> = counts
        .into_iter()
        .map(|(t, (a, b))| {
            let c = (n_pos - a) as f64;
            let d = (n - n_pos - b) as f64;
            let chi = chi_square_2x2(a as f64, b as f64, c, d);
            (t, chi)
        })
        .collect();
    sort_scored(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Chapter;

    fn art(id: &str, chapters: &[(&str, Label)]) -> Article {
        Article {
            id: id.into(),
            year: None,
            venue: None,
            chapters: chapters
                .iter()
                .enumerate()
                .map(|(i, (t, l))| Chapter::new(i as u32 + 1, *t, "x").with_label(*l))
                .collect(),
        }
    }

    #[test]
    fn previous_title_signal() {
        use Label::*;
        let corpus: Vec<Article> = (0..10)
            .map(|i| {
                art(
                    &format!("a{i}"),
                    &[
                        ("Introduction", Introduction),
                        ("Related Work", RelatedWork),
                        ("Our Model", Method),
                        ("Experiments", EvalResult),
                        ("Conclusion", Conclusion),
                    ],
                )
            })
            .collect();
        let sw = BTreeSet::new();
        let r = context_chi_analysis(&corpus, Method, -1, &sw).unwrap();
        assert_eq!(r[0].0, "relat");
        assert!(context_chi_analysis(&corpus, Method, -40, &sw).unwrap().is_empty());
        assert!(context_chi_analysis(&corpus, Other, -1, &sw).is_err());
        assert!(context_chi_analysis(&corpus, Method, 0, &sw).is_err());
    }
}
