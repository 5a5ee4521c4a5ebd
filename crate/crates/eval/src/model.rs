//! One handle over classical, CRF and neural artifacts.

use std::path::Path;

use chapterfn_core::artifact::Artifact;
use chapterfn_core::features::Provenance;
use chapterfn_core::pipeline::TrainedModel;
use chapterfn_core::{Article, Label, Result};
use chapterfn_neural::classifier::FAMILY as NEURAL_FAMILY;
use chapterfn_neural::NeuralModel;

#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Classic(TrainedModel),
    Neural(NeuralModel),
}

impl AnyModel {
    pub fn family(&self) -> String {
        match self {
            AnyModel::Classic(m) => m.family(),
            AnyModel::Neural(_) => NEURAL_FAMILY.into(),
        }
    }

    /// Digest recorded in the artifact header.
    pub fn digest(&self) -> String {
        match self {
            AnyModel::Classic(m) => m.feature_config().digest(),
            AnyModel::Neural(m) => m.digest(),
        }
    }

    pub fn training_articles(&self) -> &Provenance {
        match self {
            AnyModel::Classic(m) => m.training_articles(),
            AnyModel::Neural(m) => m.training_articles(),
        }
    }

    pub fn predict_article(&self, article: &Article) -> Result<Vec<Label>> {
        match self {
            AnyModel::Classic(m) => m.predict_article(article),
            AnyModel::Neural(m) => {
                m.training_articles().ensure_disjoint([article.id.as_str()])?;
                m.predict_article(article)
            }
        }
    }

    pub fn to_artifact(&self, seed: u64) -> Result<Artifact> {
        match self {
            AnyModel::Classic(m) => m.to_artifact(seed),
            AnyModel::Neural(m) => m.to_artifact(),
        }
    }

    pub fn save(&self, path: &Path, seed: u64) -> Result<()> {
        self.to_artifact(seed)?.write(path)
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        if a.header.family == NEURAL_FAMILY {
            Ok(AnyModel::Neural(NeuralModel::from_artifact(a)?))
        } else {
            Ok(AnyModel::Classic(TrainedModel::from_artifact(a)?))
        }
    }

    /// Loads any artifact; with `expected_digest`, refuses one built under a
    /// different configuration.
    pub fn load(path: &Path, expected_digest: Option<&str>) -> Result<Self> {
        let a = Artifact::read(path)?;
        if let Some(d) = expected_digest {
            a.expect_digest(d)?;
        }
        Self::from_artifact(&a)
    }
}
