use serde::Serialize;

use super::{unlabeled_article_ids, Article, Label, NUM_LABELS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub articles: usize,
    pub chapters: usize,
    pub per_label: [usize; NUM_LABELS],
    pub unlabeled: usize,
}

impl CorpusStats {
    pub fn count(&self, label: Label) -> usize {
        self.per_label[label.index()]
    }
}

/// Chapter counts per class. In strict mode an unlabeled chapter is an
/// error naming every offending article; otherwise they are tallied apart.
pub fn corpus_stats(articles: &[Article], strict: bool) -> Result<CorpusStats> {
    if strict {
        let missing = unlabeled_article_ids(articles);
        if !missing.is_empty() {
            return Err(Error::Unlabeled(missing));
        }
    }
    let mut stats = CorpusStats {
        articles: articles.len(),
        chapters: 0,
        per_label: [0; NUM_LABELS],
        unlabeled: 0,
    };
    for ch in articles.iter().flat_map(|a| &a.chapters) {
        stats.chapters += 1;
        match ch.label {
            Some(l) => stats.per_label[l.index()] += 1,
            None => stats.unlabeled += 1,
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Chapter;

    fn art(id: &str, labels: &[Label]) -> Article {
        Article {
            id: id.into(),
            year: Some(2020),
            venue: None,
            chapters: labels
                .iter()
                .enumerate()
                .map(|(i, &l)| Chapter::new(i as u32 + 1, "t", "c").with_label(l))
                .collect(),
        }
    }

    #[test]
    fn empty_corpus() {
        let s = corpus_stats(&[], true).unwrap();
        assert_eq!(s.articles, 0);
        assert_eq!(s.per_label, [0; 6]);
    }

    #[test]
    fn hand_counted_fixture() {
        use Label::*;
        let corpus = vec![
            art("a", &[Introduction, Method, Conclusion]),
            art("b", &[Introduction, EvalResult, EvalResult]),
        ];
        let s = corpus_stats(&corpus, true).unwrap();
        assert_eq!(s.articles, 2);
        assert_eq!(s.per_label, [2, 0, 1, 2, 1, 0]);
        assert_eq!(s.per_label.iter().sum::<usize>(), 6);
    }

    #[test]
    fn strict_mode_lists_unlabeled_articles() {
        let mut a = art("a", &[Label::Method]);
        a.chapters[0].label = None;
        let b = art("b", &[Label::Method]);
        match corpus_stats(&[a.clone(), b.clone()], true) {
            Err(Error::Unlabeled(ids)) => assert_eq!(ids, vec!["a".to_string()]),
            other => panic!("{other:?}"),
        }
        let s = corpus_stats(&[a, b], false).unwrap();
        assert_eq!(s.unlabeled, 1);
    }
}
