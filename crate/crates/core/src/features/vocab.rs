use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, NUM_LABELS};
use crate::error::{Error, Result};

/// Which articles a fitted statistic was computed from. Evaluation code
/// checks that held-out articles are disjoint from this set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub articles: BTreeSet<String>,
}

impl Provenance {
    pub fn from_ids<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Provenance {
            articles: ids.into_iter().map(Into::into).collect(),
        }
    }

    pub fn ensure_disjoint<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let overlap: BTreeSet<String> = ids
            .into_iter()
            .filter(|id| self.articles.contains(*id))
            .map(str::to_string)
            .collect();
        if overlap.is_empty() {
            Ok(())
        } else {
            Err(Error::Leakage(overlap.into_iter().collect()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    Chi,
    Ig,
    None,
}

/// Chi-square statistic of a 2x2 contingency table; 0 when any marginal is 0.
pub fn chi_square_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let denom = (a + b) * (c + d) * (a + c) * (b + d);
    if denom == 0.0 {
        return 0.0;
    }
    let n = a + b + c + d;
    let diff = a * d - b * c;
    n * diff * diff / denom
}

fn entropy(counts: impl IntoIterator<Item = f64>, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .into_iter()
        .filter(|&c| c > 0.0)
        .map(|c| {
            let p = c / total;
            -p * p.ln()
        })
        .sum()
}

/// Term space with document-level statistics used for selection and
/// TF-IDF weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabRecord", into = "VocabRecord")]
pub struct Vocabulary {
    terms: Vec<String>,
    term_to_id: HashMap<String, usize>,
    doc_freq: Vec<u32>,
    class_term_doc: Vec<[u32; NUM_LABELS]>,
    n_docs: u32,
    n_docs_per_class: [u32; NUM_LABELS],
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct VocabRecord {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    class_term_doc: Vec<[u32; NUM_LABELS]>,
    n_docs: u32,
    n_docs_per_class: [u32; NUM_LABELS],
    provenance: Provenance,
}

impl From<VocabRecord> for Vocabulary {
    fn from(r: VocabRecord) -> Self {
        let term_to_id = r.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms: r.terms,
            term_to_id,
            doc_freq: r.doc_freq,
            class_term_doc: r.class_term_doc,
            n_docs: r.n_docs,
            n_docs_per_class: r.n_docs_per_class,
            provenance: r.provenance,
        }
    }
}

impl From<Vocabulary> for VocabRecord {
    fn from(v: Vocabulary) -> Self {
        VocabRecord {
            terms: v.terms,
            doc_freq: v.doc_freq,
            class_term_doc: v.class_term_doc,
            n_docs: v.n_docs,
            n_docs_per_class: v.n_docs_per_class,
            provenance: v.provenance,
        }
    }
}

impl Vocabulary {
    /// Builds the vocabulary from labeled token sequences. Term ids follow
    /// lexicographic order.
    pub fn fit<'a, I>(docs: I, provenance: Provenance) -> Self
    where
        I: IntoIterator<Item = (&'a [String], Label)>,
    {
        let mut stats: BTreeMap<&'a str, (u32, [u32; NUM_LABELS])> = BTreeMap::new();
        let mut n_docs = 0u32;
        let mut n_docs_per_class = [0u32; NUM_LABELS];
        for (tokens, label) in docs {
            n_docs += 1;
            n_docs_per_class[label.index()] += 1;
            let distinct: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
            for t in distinct {
                let e = stats.entry(t).or_insert((0, [0; NUM_LABELS]));
                e.0 += 1;
                e.1[label.index()] += 1;
            }
        }
        let mut v = Vocabulary {
            terms: Vec::with_capacity(stats.len()),
            term_to_id: HashMap::with_capacity(stats.len()),
            doc_freq: Vec::with_capacity(stats.len()),
            class_term_doc: Vec::with_capacity(stats.len()),
            n_docs,
            n_docs_per_class,
            provenance,
        };
        for (t, (df, per_class)) in stats {
            v.term_to_id.insert(t.to_string(), v.terms.len());
            v.terms.push(t.to_string());
            v.doc_freq.push(df);
            v.class_term_doc.push(per_class);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, id: usize) -> u32 {
        self.doc_freq[id]
    }

    pub fn class_doc_freq(&self, id: usize, class: Label) -> u32 {
        self.class_term_doc[id][class.index()]
    }

    pub fn n_docs(&self) -> u32 {
        self.n_docs
    }

    pub fn n_docs_in_class(&self, class: Label) -> u32 {
        self.n_docs_per_class[class.index()]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn lookup(&self, term: &str) -> Result<usize> {
        self.id(term).ok_or_else(|| Error::UnknownTerm(term.to_string()))
    }

    fn chi_by_id(&self, id: usize, class: Label) -> f64 {
        let a = self.class_term_doc[id][class.index()] as f64;
        let b = self.doc_freq[id] as f64 - a;
        let c = self.n_docs_per_class[class.index()] as f64 - a;
        let d = self.n_docs as f64 - a - b - c;
        chi_square_2x2(a, b, c, d)
    }

    fn ig_by_id(&self, id: usize) -> f64 {
        let n = self.n_docs as f64;
        if n == 0.0 {
            return 0.0;
        }
        let df = self.doc_freq[id] as f64;
        let h = entropy(self.n_docs_per_class.iter().map(|&c| c as f64), n);
        let with = entropy(self.class_term_doc[id].iter().map(|&c| c as f64), df);
        let without = entropy(
            self.n_docs_per_class
                .iter()
                .zip(&self.class_term_doc[id])
                .map(|(&nc, &a)| (nc - a) as f64),
            n - df,
        );
        (h - (df / n) * with - ((n - df) / n) * without).max(0.0)
    }

    /// Document-level chi-square association of `term` with `class`.
    pub fn chi_square(&self, term: &str, class: Label) -> Result<f64> {
        Ok(self.chi_by_id(self.lookup(term)?, class))
    }

    /// Information gain (natural log) of the class variable given the
    /// presence or absence of `term`.
    pub fn info_gain(&self, term: &str) -> Result<f64> {
        Ok(self.ig_by_id(self.lookup(term)?))
    }

    /// Class-prior weighted chi-square: sum over classes of p(c) * chi2(t, c).
    pub fn weighted_chi(&self, term: &str) -> Result<f64> {
        Ok(self.weighted_chi_by_id(self.lookup(term)?))
    }

    fn weighted_chi_by_id(&self, id: usize) -> f64 {
        if self.n_docs == 0 {
            return 0.0;
        }
        Label::ALL
            .iter()
            .map(|&c| self.n_docs_per_class[c.index()] as f64 / self.n_docs as f64 * self.chi_by_id(id, c))
            .sum()
    }

    /// Every term with its weighted chi-square, highest first (ties by term).
    pub fn weighted_chi_ranking(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = (0..self.len())
            .map(|i| (self.terms[i].clone(), self.weighted_chi_by_id(i)))
            .collect();
        sort_scored(&mut out);
        out
    }

    fn selection_score(&self, id: usize, method: Selection) -> f64 {
        match method {
            Selection::Chi => Label::ALL
                .iter()
                .map(|&c| self.chi_by_id(id, c))
                .fold(0.0, f64::max),
            Selection::Ig => self.ig_by_id(id),
            Selection::None => 0.0,
        }
    }

    /// Keeps the `top_k` best terms under `method` (max over classes) and
    /// re-indexes them in score order, ties broken lexicographically.
    /// Returns a warning when `top_k` exceeds the vocabulary size.
    pub fn select(&self, method: Selection, top_k: usize) -> Result<(Vocabulary, Option<String>)> {
        if top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if method == Selection::None {
            return Ok((self.clone(), None));
        }
        let warning = (top_k > self.len()).then(|| {
            format!(
                "top_k = {top_k} exceeds the vocabulary size {}; keeping every term",
                self.len()
            )
        });
        let mut scored: Vec<(String, f64)> = (0..self.len())
            .map(|i| (self.terms[i].clone(), self.selection_score(i, method)))
            .collect();
        sort_scored(&mut scored);
        scored.truncate(top_k);
        let mut out = Vocabulary {
            terms: Vec::with_capacity(scored.len()),
            term_to_id: HashMap::with_capacity(scored.len()),
            doc_freq: Vec::with_capacity(scored.len()),
            class_term_doc: Vec::with_capacity(scored.len()),
            n_docs: self.n_docs,
            n_docs_per_class: self.n_docs_per_class,
            provenance: self.provenance.clone(),
        };
        for (term, _) in scored {
            let old = self.term_to_id[&term];
            out.term_to_id.insert(term.clone(), out.terms.len());
            out.terms.push(term);
            out.doc_freq.push(self.doc_freq[old]);
            out.class_term_doc.push(self.class_term_doc[old]);
        }
        Ok((out, warning))
    }

    /// Smoothed inverse document frequency plus one.
    pub fn idf(&self, id: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.doc_freq[id] as f64)).ln() + 1.0
    }
}

/// Sorts by score descending, then term ascending.
pub(crate) fn sort_scored(v: &mut [(String, f64)]) {
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}
