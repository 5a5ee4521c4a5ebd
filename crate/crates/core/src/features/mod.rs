//! Lexical and non-semantic chapter features.

mod additional;
mod context;
pub mod porter;
pub mod stopwords;
mod text;
mod vocab;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use additional::{
    encode_additional, relative_position, relative_positions, relative_positions_or_ordinal, AdditionalConfig,
    AdditionalEncoder, Characteristics,
};
pub use context::context_chi_analysis;
pub use text::{raw_tokens, split_sentences, strip_index_numbers, tokenize_normalize};
pub use vocab::{chi_square_2x2, Provenance, Selection, Vocabulary};

/// A sparse real vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidInput("sparse indices must be strictly increasing".into()));
        }
        if let Some(&(i, _)) = entries.last() {
            if i >= dim {
                return Err(Error::DimMismatch { expected: dim, got: i + 1 });
            }
        }
        if entries.iter().any(|(_, w)| !w.is_finite()) {
            return Err(Error::NonFinite("sparse vector weight".into()));
        }
        Ok(SparseVector { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector { dim, entries: Vec::new() }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut s) = (0, 0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    s += a.1 * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        s
    }

    pub fn scaled(&self, k: f64) -> SparseVector {
        SparseVector {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, w)| (i, w * k)).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            d[i] = w;
        }
        d
    }

    /// Splits into `[0, at)` and `[at, dim)`, re-basing the second part.
    pub fn split_at(&self, at: usize) -> (SparseVector, SparseVector) {
        let at = at.min(self.dim);
        let k = self.entries.partition_point(|&(i, _)| i < at);
        (
            SparseVector { dim: at, entries: self.entries[..k].to_vec() },
            SparseVector {
                dim: self.dim - at,
                entries: self.entries[k..].iter().map(|&(i, w)| (i - at, w)).collect(),
            },
        )
    }

    /// Appends `other` after this vector's last dimension.
    pub fn append(&self, other: &SparseVector) -> SparseVector {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().map(|&(i, w)| (i + self.dim, w)));
        SparseVector { dim: self.dim + other.dim, entries }
    }
}

/// Appends a dense block of additional features to a lexical vector; zero
/// entries of the block are not stored.
pub fn concat_features(lexical: &SparseVector, additional: &[f64]) -> SparseVector {
    lexical.append(&SparseVector::from_dense(additional))
}

/// TF-IDF vector of `tokens` over `vocab`: raw term frequency times smoothed
/// idf plus one, L2-normalised. Out-of-vocabulary tokens are dropped.
pub fn tfidf_vectorize(tokens: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut tf: std::collections::BTreeMap<usize, f64> = Default::default();
    for t in tokens {
        if let Some(id) = vocab.id(t) {
            *tf.entry(id).or_default() += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = tf.into_iter().map(|(id, f)| (id, f * vocab.idf(id))).collect();
    let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for e in &mut entries {
            e.1 /= norm;
        }
    }
    SparseVector { dim: vocab.len(), entries }
}

/// Lexical and additional-feature configuration.
///
/// Content and titles are selected separately: content defaults to chi-square
/// selection of 5357 terms, titles keep every term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// `None` means the built-in English list.
    pub stopwords: Option<Vec<String>>,
    pub selection: Selection,
    pub top_k: usize,
    pub title_selection: Selection,
    pub title_top_k: usize,
    pub strip_title_numbers: bool,
    pub additional: AdditionalConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            stopwords: None,
            selection: Selection::Chi,
            top_k: 5357,
            title_selection: Selection::None,
            title_top_k: 5000,
            strip_title_numbers: true,
            additional: AdditionalConfig::default(),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.selection != Selection::None && self.top_k == 0 {
            return Err(Error::Config("features.top_k must be at least 1".into()));
        }
        if self.title_selection != Selection::None && self.title_top_k == 0 {
            return Err(Error::Config("features.title_top_k must be at least 1".into()));
        }
        self.additional.validate()
    }

    pub fn stopword_set(&self) -> BTreeSet<String> {
        match &self.stopwords {
            Some(list) => list.iter().map(|s| s.to_lowercase()).collect(),
            None => stopwords::ENGLISH.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Stable digest of every field, recorded in artifacts and reports.
    pub fn digest(&self) -> String {
        crate::digest::digest_json(self)
    }
}
