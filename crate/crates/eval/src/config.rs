//! Run configuration shared by every experiment, loadable from TOML.

use std::path::Path;

use chapterfn_core::classic::ClassicConfig;
use chapterfn_core::crf::CrfTrainConfig;
use chapterfn_core::features::FeatureConfig;
use chapterfn_core::{Error, Label, Result};
use chapterfn_neural::Hyper;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub folds: usize,
    /// Macro averages run over these classes.
    pub macro_classes: Vec<Label>,
    pub features: FeatureConfig,
    pub classic: ClassicConfig,
    pub crf: CrfTrainConfig,
    pub neural: Hyper,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            folds: 5,
            macro_classes: Label::SUBSTANTIVE.to_vec(),
            features: FeatureConfig::default(),
            classic: ClassicConfig::default(),
            crf: CrfTrainConfig::default(),
            neural: Hyper::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Overrides every seed with `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.neural.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.macro_classes.is_empty() {
            return Err(Error::Config("macro_classes is empty".into()));
        }
        if !(self.classic.c > 0.0) || self.classic.knn_k == 0 || self.classic.max_iters == 0 {
            return Err(Error::Config("classic.c, classic.knn_k and classic.max_iters must be positive".into()));
        }
        if !(self.crf.lambda >= 0.0) || self.crf.max_iters == 0 {
            return Err(Error::Config("crf.lambda must be nonnegative and crf.max_iters positive".into()));
        }
        self.features.validate()?;
        self.neural.validate()
    }

    pub fn digest(&self) -> String {
        chapterfn_core::digest::digest_json(self)
    }
}
