//! Linear-chain CRF over the chapter sequence of an article.
//!
//! Parameters are laid out as one flat vector: unary weights
//! `feature * n_labels + label`, followed by transitions `a * n_labels + b`.

mod inference;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Article, Label, NUM_LABELS};
use crate::error::{Error, Result};
use crate::features::{raw_tokens, strip_index_numbers};
use crate::features::{relative_positions_or_ordinal, Provenance};

use inference::{forward_backward, viterbi};

/// Feature ids per position.
pub type CrfSequence = Vec<Vec<usize>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrfModel {
    pub n_labels: usize,
    pub n_features: usize,
    pub lambda: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrfTrainConfig {
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for CrfTrainConfig {
    fn default() -> Self {
        CrfTrainConfig { lambda: 0.1, max_iters: 500, tol: 1e-7 }
    }
}

impl CrfModel {
    pub fn zeros(n_labels: usize, n_features: usize, lambda: f64) -> Self {
        CrfModel { n_labels, n_features, lambda, weights: vec![0.0; n_features * n_labels + n_labels * n_labels] }
    }

    pub fn n_params(&self) -> usize {
        self.weights.len()
    }

    pub fn trans(&self) -> &[f64] {
        &self.weights[self.n_features * self.n_labels..]
    }

    pub fn unary_weight(&self, feature: usize, label: usize) -> f64 {
        self.weights[feature * self.n_labels + label]
    }

    fn check(&self, seq: &[Vec<usize>]) -> Result<()> {
        if seq.is_empty() {
            return Err(Error::InvalidInput("empty CRF sequence".into()));
        }
        if let Some(&f) = seq.iter().flatten().find(|&&f| f >= self.n_features) {
            return Err(Error::InvalidInput(format!("feature id {f} outside dictionary of {}", self.n_features)));
        }
        Ok(())
    }

    /// Per-position unary scores.
    pub fn unary(&self, seq: &[Vec<usize>]) -> Vec<Vec<f64>> {
        let n = self.n_labels;
        seq.iter()
            .map(|fs| {
                let mut u = vec![0.0; n];
                for &f in fs {
                    for (y, v) in u.iter_mut().enumerate() {
                        *v += self.weights[f * n + y];
                    }
                }
                u
            })
            .collect()
    }

    /// Unnormalised score of a label path.
    pub fn score(&self, seq: &[Vec<usize>], labels: &[usize]) -> f64 {
        let u = self.unary(seq);
        let tr = self.trans();
        let mut s = u[0][labels[0]];
        for t in 1..labels.len() {
            s += u[t][labels[t]] + tr[labels[t - 1] * self.n_labels + labels[t]];
        }
        s
    }

    pub fn log_partition(&self, seq: &[Vec<usize>]) -> Result<f64> {
        self.check(seq)?;
        Ok(forward_backward(&self.unary(seq), self.trans(), self.n_labels).log_z)
    }

    pub fn marginals(&self, seq: &[Vec<usize>]) -> Result<Vec<Vec<f64>>> {
        self.check(seq)?;
        Ok(forward_backward(&self.unary(seq), self.trans(), self.n_labels).node_marginals())
    }

    /// Best label path; ties go to the smaller label id.
    pub fn viterbi(&self, seq: &[Vec<usize>]) -> Result<Vec<usize>> {
        self.check(seq)?;
        Ok(viterbi(&self.unary(seq), self.trans(), self.n_labels))
    }

    /// Penalised log-likelihood and its gradient.
    pub fn objective(&self, data: &[(CrfSequence, Vec<usize>)]) -> Result<(f64, Vec<f64>)> {
        let n = self.n_labels;
        let parts: Vec<(f64, Vec<f64>)> = data
            .par_iter()
            .map(|(seq, gold)| {
                let mut g = vec![0.0; self.weights.len()];
                let u = self.unary(seq);
                let fb = forward_backward(&u, self.trans(), n);
                let marg = fb.node_marginals();
                for (t, fs) in seq.iter().enumerate() {
                    for &f in fs {
                        g[f * n + gold[t]] += 1.0;
                        for y in 0..n {
                            g[f * n + y] -= marg[t][y];
                        }
                    }
                }
                let off = self.n_features * n;
                for t in 1..gold.len() {
                    g[off + gold[t - 1] * n + gold[t]] += 1.0;
                }
                for (k, e) in fb.edge_marginals(&u, self.trans(), n).into_iter().enumerate() {
                    g[off + k] -= e;
                }
                (self.score(seq, gold) - fb.log_z, g)
            })
            .collect();
        let mut ll = 0.0;
        let mut grad = vec![0.0; self.weights.len()];
        for (l, g) in parts {
            ll += l;
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        let sq: f64 = self.weights.iter().map(|w| w * w).sum();
        for (g, w) in grad.iter_mut().zip(&self.weights) {
            *g -= 2.0 * self.lambda * w;
        }
        let obj = ll - self.lambda * sq;
        if !obj.is_finite() {
            return Err(Error::Training(format!("CRF objective became {obj}")));
        }
        Ok((obj, grad))
    }
}

fn validate_data(data: &[(CrfSequence, Vec<usize>)], n_labels: usize, n_features: usize) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Training("CRF needs at least one sequence".into()));
    }
    for (seq, gold) in data {
        if seq.is_empty() || seq.len() != gold.len() {
            return Err(Error::InvalidInput("CRF sequence empty or label count mismatch".into()));
        }
        if gold.iter().any(|&y| y >= n_labels) || seq.iter().flatten().any(|&f| f >= n_features) {
            return Err(Error::InvalidInput("CRF label or feature id out of range".into()));
        }
    }
    Ok(())
}

/// Maximises the penalised log-likelihood by full-batch gradient ascent
/// with backtracking. Returns the model and the objective trace.
pub fn crf_train(
    data: &[(CrfSequence, Vec<usize>)],
    n_labels: usize,
    n_features: usize,
    cfg: &CrfTrainConfig,
) -> Result<(CrfModel, Vec<f64>)> {
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
        return Err(Error::Config(format!("CRF lambda must be >= 0, got {}", cfg.lambda)));
    }
    validate_data(data, n_labels, n_features)?;
    let mut model = CrfModel::zeros(n_labels, n_features, cfg.lambda);
    let (mut obj, mut grad) = model.objective(data)?;
    let mut trace = vec![obj];
    let mut step: f64 = 1.0;
    for _ in 0..cfg.max_iters {
        let gsq: f64 = grad.iter().map(|g| g * g).sum();
        if gsq.sqrt() < 1e-10 {
            break;
        }
        step = (step * 2.0).min(1e4);
        let (trial, t_obj, t_grad) = loop {
            let mut trial = model.clone();
            trial.weights.iter_mut().zip(&grad).for_each(|(w, g)| *w += step * g);
            let (o, g) = match trial.objective(data) {
                Ok(v) => v,
                Err(_) if step > 1e-12 => {
                    step *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if o >= obj + 0.5 * step * gsq || step <= 1e-12 {
                break (trial, o, g);
            }
            step *= 0.5;
        };
        if t_obj < obj {
            break;
        }
        let rel = (t_obj - obj) / obj.abs().max(1e-12);
        model = trial;
        obj = t_obj;
        grad = t_grad;
        trace.push(obj);
        if rel < cfg.tol {
            break;
        }
    }
    Ok((model, trace))
}

/// Indicator feature names for each chapter: capped absolute position,
/// relative-position decile, first and last two title tokens, whole title.
pub fn chapter_features(article: &Article) -> Result<Vec<Vec<String>>> {
    let rel = relative_positions_or_ordinal(article);
    Ok(article
        .chapters
        .iter()
        .zip(rel)
        .map(|(ch, r)| {
            let toks = raw_tokens(&strip_index_numbers(&ch.title));
            let mut f = vec![
                "bias".to_string(),
                format!("abs={}", ch.ordinal.min(10)),
                format!("rel={}", ((r * 10.0).floor() as usize).min(9)),
                format!("title={}", toks.join(" ")),
            ];
            for (k, t) in toks.iter().take(2).enumerate() {
                f.push(format!("first{k}={t}"));
            }
            for (k, t) in toks.iter().rev().take(2).enumerate() {
                f.push(format!("last{k}={t}"));
            }
            f
        })
        .collect())
}

/// Feature dictionary frozen on training articles. Unknown names encode to
/// nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrfDictionary {
    names: Vec<String>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
    provenance: Provenance,
}

impl CrfDictionary {
    pub fn fit(features: &[Vec<Vec<String>>], provenance: Provenance) -> Self {
        let names: Vec<String> = features
            .iter()
            .flatten()
            .flatten()
            .cloned()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        Self::from_names(names, provenance)
    }

    pub fn from_names(names: Vec<String>, provenance: Provenance) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        CrfDictionary { names, index, provenance }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn encode(&self, features: &[Vec<String>]) -> CrfSequence {
        features
            .iter()
            .map(|fs| {
                let mut ids: Vec<usize> = fs.iter().filter_map(|f| self.index.get(f).copied()).collect();
                ids.sort_unstable();
                ids.dedup();
                ids
            })
            .collect()
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.index = self.names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    }
}

/// A trained CRF together with its frozen dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrfTagger {
    pub dict: CrfDictionary,
    pub model: CrfModel,
}

impl CrfTagger {
    pub fn train(articles: &[Article], cfg: &CrfTrainConfig) -> Result<CrfTagger> {
        let provenance = Provenance::from_ids(articles.iter().map(|a| a.id.as_str()));
        let feats: Vec<Vec<Vec<String>>> = articles.iter().map(chapter_features).collect::<Result<_>>()?;
        let dict = CrfDictionary::fit(&feats, provenance);
        let mut data = Vec::with_capacity(articles.len());
        for (a, f) in articles.iter().zip(&feats) {
            let gold = a
                .chapters
                .iter()
                .map(|c| c.label.map(Label::index).ok_or_else(|| Error::Unlabeled(vec![a.id.clone()])))
                .collect::<Result<Vec<_>>>()?;
            data.push((dict.encode(f), gold));
        }
        let (model, _) = crf_train(&data, NUM_LABELS, dict.len(), cfg)?;
        Ok(CrfTagger { dict, model })
    }

    pub fn predict(&self, article: &Article) -> Result<Vec<Label>> {
        self.dict.provenance().ensure_disjoint([article.id.as_str()])?;
        let seq = self.dict.encode(&chapter_features(article)?);
        let path = self.model.viterbi(&seq)?;
        Ok(path.into_iter().map(|y| Label::from_index(y).expect("label index")).collect())
    }

    /// Restores lookup tables after deserialisation.
    pub fn finish_load(&mut self) {
        self.dict.rebuild_index();
    }
}
