//! The traditional classifiers: multinomial Naive Bayes, one-vs-one
//! logistic regression and linear SVM, and cosine k-nearest-neighbours.

mod knn;
mod nb;
mod pairwise;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SparseVector;

pub use knn::{knn_predict, train_knn, KnnModel};
pub use nb::{train_nb, NbModel};
pub use pairwise::{predict_ovo, train_pairwise, Loss, OvoScore, PairModel, PairwiseConfig, PairwiseLinearModel};

pub type Example = (SparseVector, Label);

/// Model family tag, as written in artifact headers and report rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Nb,
    Lr,
    Svm,
    Knn,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Nb, Family::Lr, Family::Knn, Family::Svm];

    pub fn name(self) -> &'static str {
        match self {
            Family::Nb => "NB",
            Family::Lr => "LR",
            Family::Svm => "SVM",
            Family::Knn => "KNN",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        match s.to_ascii_lowercase().as_str() {
            "nb" => Ok(Family::Nb),
            "lr" => Ok(Family::Lr),
            "svm" => Ok(Family::Svm),
            "knn" => Ok(Family::Knn),
            other => Err(Error::Config(format!("unknown model family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicConfig {
    pub c: f64,
    pub max_iters: usize,
    pub knn_k: usize,
}

impl Default for ClassicConfig {
    fn default() -> Self {
        ClassicConfig { c: 1.0, max_iters: 1000, knn_k: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ClassicModel {
    Nb(NbModel),
    Pairwise(PairwiseLinearModel),
    Knn(KnnModel),
}

impl ClassicModel {
    pub fn train(family: Family, data: &[Example], cfg: &ClassicConfig) -> Result<Self> {
        Ok(match family {
            Family::Nb => ClassicModel::Nb(train_nb(data)?),
            Family::Lr | Family::Svm => {
                let loss = if family == Family::Lr { Loss::Logistic } else { Loss::Hinge };
                let pc = PairwiseConfig { c: cfg.c, max_iters: cfg.max_iters, ..PairwiseConfig::for_loss(loss) };
                ClassicModel::Pairwise(train_pairwise(data, &pc)?)
            }
            Family::Knn => ClassicModel::Knn(train_knn(data, cfg.knn_k)?),
        })
    }

    pub fn family(&self) -> Family {
        match self {
            ClassicModel::Nb(_) => Family::Nb,
            ClassicModel::Pairwise(m) if m.loss == Loss::Logistic => Family::Lr,
            ClassicModel::Pairwise(_) => Family::Svm,
            ClassicModel::Knn(_) => Family::Knn,
        }
    }

    pub fn predict(&self, x: &SparseVector) -> Result<Label> {
        match self {
            ClassicModel::Nb(m) => m.predict(x),
            ClassicModel::Pairwise(m) => predict_ovo(m, x).map(|(l, _)| l),
            ClassicModel::Knn(m) => knn_predict(m, x),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            ClassicModel::Nb(m) => m.dim(),
            ClassicModel::Pairwise(m) => m.dim,
            ClassicModel::Knn(m) => m.dim(),
        }
    }
}

pub(crate) fn check_finite(data: &[Example]) -> Result<()> {
    for (i, (x, _)) in data.iter().enumerate() {
        if x.entries().iter().any(|(_, w)| !w.is_finite()) {
            return Err(Error::NonFinite(format!("feature value in example {i}")));
        }
    }
    Ok(())
}

pub(crate) fn check_dims(data: &[Example]) -> Result<usize> {
    let dim = data.first().map(|(x, _)| x.dim()).ok_or_else(|| Error::Training("no training examples".into()))?;
    if let Some((x, _)) = data.iter().find(|(x, _)| x.dim() != dim) {
        return Err(Error::DimMismatch { expected: dim, got: x.dim() });
    }
    Ok(dim)
}

/// Sorted distinct labels of `data`.
pub(crate) fn present_classes(data: &[Example]) -> Vec<Label> {
    let mut seen = [false; crate::corpus::NUM_LABELS];
    for (_, l) in data {
        seen[l.index()] = true;
    }
    Label::ALL.iter().copied().filter(|l| seen[l.index()]).collect()
}
