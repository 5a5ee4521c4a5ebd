//! End-to-end neural chapter classifier: vocabulary, network and artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use chapterfn_core::artifact::{f64s_to_le, le_to_f64s, Artifact, ArtifactHeader};
use chapterfn_core::features::Provenance;
use chapterfn_core::{Article, Error, Label, Result};
use serde::Serialize;

use crate::data::{encode_article, EncodedArticle, TokenVocab};
use crate::matrix::Matrix;
use crate::model::{Hyper, ModelSpec, Network};
use crate::train::{train_network, TrainHistory};

pub const FAMILY: &str = "neural";

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel {
    pub vocab: TokenVocab,
    pub net: Network,
    pub history: TrainHistory,
}

#[derive(Serialize)]
struct DigestInput<'a> {
    spec: &'a ModelSpec,
    hyper: &'a Hyper,
}

/// Digest of everything that shapes the network and its inputs.
pub fn config_digest(spec: &ModelSpec, hyper: &Hyper) -> String {
    chapterfn_core::digest::digest_json(&DigestInput { spec, hyper })
}

impl NeuralModel {
    /// Fits the vocabulary on `train` only, then trains with early stopping
    /// on `valid`.
    pub fn fit(train: &[Article], valid: &[Article], spec: ModelSpec, hyper: Hyper) -> Result<Self> {
        let vocab = TokenVocab::fit(train, hyper.min_count);
        vocab.provenance().ensure_disjoint(valid.iter().map(|a| a.id.as_str()))?;
        let enc = |xs: &[Article]| xs.iter().map(|a| encode_article(a, &vocab, &hyper.caps)).collect::<Vec<_>>();
        let (tr, va) = (enc(train), enc(valid));
        let mut net = Network::new(spec, hyper, vocab.size())?;
        let history = train_network(&mut net, &tr, &va)?;
        Ok(NeuralModel { vocab, net, history })
    }

    pub fn training_articles(&self) -> &Provenance {
        self.vocab.provenance()
    }

    pub fn digest(&self) -> String {
        config_digest(&self.net.spec, &self.net.hyper)
    }

    pub fn encode(&self, article: &Article) -> EncodedArticle {
        encode_article(article, &self.vocab, &self.net.hyper.caps)
    }

    pub fn predict_article(&self, article: &Article) -> Result<Vec<Label>> {
        self.net.predict(&self.encode(article))
    }

    pub fn to_artifact(&self) -> Result<Artifact> {
        let p = &self.net.params;
        let shapes: Vec<String> = p
            .ids()
            .map(|id| {
                let (r, c) = p.get(id).shape();
                format!("{}={r}x{c}", p.name(id))
            })
            .collect();
        let mut extra = BTreeMap::new();
        extra.insert("spec".into(), serde_json::to_string(&self.net.spec)?);
        extra.insert("hyper".into(), serde_json::to_string(&self.net.hyper)?);
        extra.insert("vocab".into(), serde_json::to_string(&self.vocab)?);
        extra.insert("history".into(), serde_json::to_string(&self.history)?);
        extra.insert("shapes".into(), shapes.join(";"));
        let values: Vec<f64> = p.ids().flat_map(|id| p.get(id).data.iter().copied()).collect();
        Ok(Artifact {
            header: ArtifactHeader {
                family: FAMILY.into(),
                feature_dim: self.vocab.size(),
                classes: Label::ALL.to_vec(),
                config_digest: self.digest(),
                seed: self.net.hyper.seed,
                extra,
            },
            body: f64s_to_le(&values),
        })
    }

    /// Rebuilds the network from the header and checks every parameter
    /// shape against the stored manifest before copying values.
    pub fn from_artifact(artifact: &Artifact) -> Result<Self> {
        artifact.expect_family(FAMILY)?;
        let h = &artifact.header;
        let field = |k: &str| h.extra.get(k).ok_or_else(|| Error::Artifact(format!("neural artifact lacks `x-{k}`")));
        let spec: ModelSpec = serde_json::from_str(field("spec")?)?;
        let hyper: Hyper = serde_json::from_str(field("hyper")?)?;
        let mut vocab: TokenVocab = serde_json::from_str(field("vocab")?)?;
        vocab.rebuild_index();
        let history: TrainHistory = serde_json::from_str(field("history")?)?;
        if config_digest(&spec, &hyper) != h.config_digest {
            return Err(Error::Artifact("header digest does not match its spec and hyperparameters".into()));
        }
        if vocab.size() != h.feature_dim {
            return Err(Error::Artifact(format!("vocabulary has {} rows, header says {}", vocab.size(), h.feature_dim)));
        }
        let mut net = Network::new(spec, hyper, vocab.size())?;
        let manifest: Vec<&str> = field("shapes")?.split(';').collect();
        let ids: Vec<_> = net.params.ids().collect();
        if manifest.len() != ids.len() {
            return Err(Error::Artifact(format!("{} parameters stored, architecture has {}", manifest.len(), ids.len())));
        }
        let values = le_to_f64s(&artifact.body)?;
        let mut off = 0;
        for (id, entry) in ids.into_iter().zip(manifest) {
            let (r, c) = net.params.get(id).shape();
            let expected = format!("{}={r}x{c}", net.params.name(id));
            if entry != expected {
                return Err(Error::Artifact(format!("shape manifest entry `{entry}` does not match `{expected}`")));
            }
            let n = r * c;
            let chunk = values.get(off..off + n).ok_or_else(|| Error::Artifact("parameter body is truncated".into()))?;
            *net.params.get_mut(id) = Matrix::from_vec(r, c, chunk.to_vec());
            off += n;
        }
        if off != values.len() {
            return Err(Error::Artifact(format!("{} trailing values in parameter body", values.len() - off)));
        }
        Ok(NeuralModel { vocab, net, history })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_artifact()?.write(path)
    }

    pub fn load(path: &Path, expected_digest: Option<&str>) -> Result<Self> {
        let a = Artifact::read(path)?;
        if let Some(d) = expected_digest {
            a.expect_digest(d)?;
        }
        Self::from_artifact(&a)
    }
}
