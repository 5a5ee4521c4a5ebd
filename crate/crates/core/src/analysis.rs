//! Corpus-level accounting: per-year chapter mixes and Pareto data for
//! ranked term scores.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Article, Label, NUM_LABELS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YearlyKind {
    Proportion,
    AvgFrequency,
}

impl YearlyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            YearlyKind::Proportion => "proportion",
            YearlyKind::AvgFrequency => "avg_frequency",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearlyTable {
    pub kind: YearlyKind,
    /// Year to one value per label, indexed by `Label::index`.
    pub rows: BTreeMap<i32, [f64; NUM_LABELS]>,
}

impl YearlyTable {
    pub fn get(&self, year: i32, label: Label) -> Option<f64> {
        self.rows.get(&year).map(|r| r[label.index()])
    }

    /// `year,label,value` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("year,label,value\n");
        for (year, row) in &self.rows {
            for l in Label::ALL {
                let _ = writeln!(s, "{year},{l},{:.6}", row[l.index()]);
            }
        }
        s
    }
}

struct YearCounts {
    papers: usize,
    chapters: [usize; NUM_LABELS],
}

fn count_by_year(articles: &[Article]) -> Result<BTreeMap<i32, YearCounts>> {
    let no_year: Vec<String> = articles.iter().filter(|a| a.year.is_none()).map(|a| a.id.clone()).collect();
    if !no_year.is_empty() {
        return Err(Error::MissingYear(no_year));
    }
    let unlabeled = crate::corpus::unlabeled_article_ids(articles);
    if !unlabeled.is_empty() {
        return Err(Error::Unlabeled(unlabeled));
    }
    let mut out: BTreeMap<i32, YearCounts> = BTreeMap::new();
    for a in articles {
        let e = out.entry(a.year.expect("checked")).or_insert(YearCounts { papers: 0, chapters: [0; NUM_LABELS] });
        e.papers += 1;
        for c in &a.chapters {
            e.chapters[c.label.expect("checked").index()] += 1;
        }
    }
    Ok(out)
}

/// Share of each label among a year's chapters.
pub fn yearly_proportion(articles: &[Article]) -> Result<YearlyTable> {
    let rows = count_by_year(articles)?
        .into_iter()
        .map(|(y, c)| {
            let total: usize = c.chapters.iter().sum();
            let mut row = [0.0; NUM_LABELS];
            for (r, n) in row.iter_mut().zip(c.chapters) {
                *r = n as f64 / total as f64;
            }
            (y, row)
        })
        .collect();
    Ok(YearlyTable { kind: YearlyKind::Proportion, rows })
}

/// Chapters of each label per paper in a year.
pub fn yearly_avg_frequency(articles: &[Article]) -> Result<YearlyTable> {
    let rows = count_by_year(articles)?
        .into_iter()
        .map(|(y, c)| {
            let mut row = [0.0; NUM_LABELS];
            for (r, n) in row.iter_mut().zip(c.chapters) {
                *r = n as f64 / c.papers as f64;
            }
            (y, row)
        })
        .collect();
    Ok(YearlyTable { kind: YearlyKind::AvgFrequency, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub rank: usize,
    pub term: String,
    pub score: f64,
    pub cumulative_share: f64,
}

/// Sorts descending (ties by term), skips the `drop_top` largest, keeps
/// `top_k`. The last share is exactly 1.
pub fn pareto_data(scores: &[(String, f64)], top_k: usize, drop_top: usize) -> Result<Vec<ParetoRow>> {
    if top_k == 0 {
        return Err(Error::InvalidInput("top_k must be positive".into()));
    }
    if scores.is_empty() {
        return Err(Error::InvalidInput("no scores to rank".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let kept: Vec<(String, f64)> = sorted.into_iter().skip(drop_top).take(top_k).collect();
    if kept.is_empty() {
        return Err(Error::InvalidInput(format!("drop_top {drop_top} removes every score")));
    }
    let total: f64 = kept.iter().map(|(_, s)| s).sum();
    let mut running = 0.0;
    let last = kept.len() - 1;
    Ok(kept
        .into_iter()
        .enumerate()
        .map(|(i, (term, score))| {
            running += score;
            let share = if i == last {
                1.0
            } else if total > 0.0 {
                running / total
            } else {
                (i + 1) as f64 / (last + 1) as f64
            };
            ParetoRow { rank: i + 1, term, score, cumulative_share: share }
        })
        .collect())
}

pub fn pareto_csv(rows: &[ParetoRow]) -> String {
    let mut s = String::from("rank,term,score,cumulative_share\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:.6},{:.6}", r.rank, r.term, r.score, r.cumulative_share);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Chapter;

    fn article(id: &str, year: i32, labels: &[Label]) -> Article {
        Article {
            id: id.into(),
            year: Some(year),
            venue: None,
            chapters: labels
                .iter()
                .enumerate()
                .map(|(i, &l)| Chapter::new(i as u32 + 1, "t", "c").with_label(l))
                .collect(),
        }
    }

    #[test]
    fn single_year_single_class() {
        let t = yearly_proportion(&[article("a", 2000, &[Label::Method, Label::Method])]).unwrap();
        assert_eq!(t.get(2000, Label::Method), Some(1.0));
        assert_eq!(t.get(2000, Label::Other), Some(0.0));
    }

    #[test]
    fn direct_ratios() {
        use Label::*;
        let a = article("a", 2010, &[Introduction, RelatedWork, RelatedWork, Method, Method, EvalResult, EvalResult]);
        let b = article("b", 2010, &[Introduction, Method, EvalResult, Conclusion]);
        let c = article("c", 2010, &[EvalResult]);
        let d = article("d", 2010, &[EvalResult, EvalResult]);
        let e = article("e", 2010, &[EvalResult]);
        let corpus = [a, b, c, d, e];
        let p = yearly_proportion(&corpus).unwrap();
        let f = yearly_avg_frequency(&corpus).unwrap();
        assert!((f.get(2010, EvalResult).unwrap() - 1.4).abs() < 1e-12);
        let row_sum: f64 = p.rows[&2010].iter().sum();
        assert!((row_sum - 1.0).abs() < 1e-12);
        assert!((p.get(2010, EvalResult).unwrap() - 7.0 / 15.0).abs() < 1e-12);
        assert!((f.rows[&2010].iter().sum::<f64>() - 3.0).abs() < 1e-12);
        let mut rev = corpus.to_vec();
        rev.reverse();
        assert_eq!(yearly_proportion(&rev).unwrap(), p);
    }

    #[test]
    fn missing_year_and_labels_are_listed() {
        let mut a = article("a", 2000, &[Label::Method]);
        a.year = None;
        assert!(matches!(yearly_proportion(&[a]), Err(Error::MissingYear(ids)) if ids == vec!["a".to_string()]));
        let mut b = article("b", 2000, &[Label::Method]);
        b.chapters[0].label = None;
        assert!(matches!(yearly_avg_frequency(&[b]), Err(Error::Unlabeled(_))));
    }

    #[test]
    fn pareto_hand_cases() {
        let s = |v: &[f64]| v.iter().enumerate().map(|(i, &x)| (format!("t{i}"), x)).collect::<Vec<_>>();
        let rows = pareto_data(&s(&[1.0, 8.0, 1.0]), 3, 0).unwrap();
        let shares: Vec<f64> = rows.iter().map(|r| r.cumulative_share).collect();
        assert!((shares[0] - 0.8).abs() < 1e-12 && (shares[1] - 0.9).abs() < 1e-12 && shares[2] == 1.0);
        let rows = pareto_data(&s(&[5000.0, 8.0, 1.0, 1.0]), 100, 1).unwrap();
        assert_eq!(rows.len(), 3);
        assert!((rows[0].cumulative_share - 0.8).abs() < 1e-12);
        let rows = pareto_data(&s(&[2.0; 4]), 4, 0).unwrap();
        for r in &rows {
            assert!((r.cumulative_share - r.rank as f64 / 4.0).abs() < 1e-12);
        }
        assert!(pareto_data(&s(&[1.0]), 0, 0).is_err());
        assert!(pareto_data(&[], 3, 0).is_err());
    }
}
