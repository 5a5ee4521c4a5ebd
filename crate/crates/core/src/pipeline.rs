//! Fit-on-train feature pipeline for the classical models, and the
//! artifact wrapper that stores a pipeline with its trained model.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, ArtifactHeader};
use crate::classic::{ClassicModel, Example};
use crate::corpus::{Article, Label};
use crate::crf::CrfTagger;
use crate::error::{Error, Result};
use crate::features::{
    concat_features, relative_positions_or_ordinal, strip_index_numbers, tfidf_vectorize, tokenize_normalize,
    AdditionalEncoder, Characteristics, FeatureConfig, Provenance, SparseVector, Vocabulary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextField {
    Title,
    Content,
    /// Title vector followed by content vector, each with its own vocabulary.
    TitleContent,
}

impl TextField {
    pub fn as_str(self) -> &'static str {
        match self {
            TextField::Title => "title",
            TextField::Content => "content",
            TextField::TitleContent => "titlecontent",
        }
    }

    /// Single-field blocks of the vector, in concatenation order.
    pub fn parts(self) -> &'static [TextField] {
        match self {
            TextField::Title => &[TextField::Title],
            TextField::Content => &[TextField::Content],
            TextField::TitleContent => &[TextField::Title, TextField::Content],
        }
    }
}

/// Which data a pipeline is being applied to. Evaluation data must not
/// overlap the articles the pipeline was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Eval,
}

/// Tokens of one chapter field under `cfg`.
pub fn field_tokens(title: &str, content: &str, field: TextField, cfg: &FeatureConfig) -> Vec<String> {
    let stop = cfg.stopword_set();
    match field {
        TextField::Title if cfg.strip_title_numbers => tokenize_normalize(&strip_index_numbers(title), &stop),
        TextField::Title => tokenize_normalize(title, &stop),
        TextField::Content => tokenize_normalize(content, &stop),
        TextField::TitleContent => {
            let mut t = field_tokens(title, content, TextField::Title, cfg);
            t.extend(tokenize_normalize(content, &stop));
            t
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicPipeline {
    pub field: TextField,
    pub characteristics: Characteristics,
    pub config: FeatureConfig,
    /// One vocabulary per entry of `field.parts()`.
    vocabs: Vec<Vocabulary>,
    encoder: AdditionalEncoder,
}

impl ClassicPipeline {
    /// Fits vocabulary, selection and IDF on the labeled chapters of `train`.
    pub fn fit(
        train: &[Article],
        field: TextField,
        characteristics: Characteristics,
        config: &FeatureConfig,
    ) -> Result<(ClassicPipeline, Vec<String>)> {
        config.validate()?;
        let provenance = Provenance::from_ids(train.iter().map(|a| a.id.as_str()));
        let mut vocabs = Vec::new();
        let mut warnings = Vec::new();
        for &part in field.parts() {
            let docs: Vec<(Vec<String>, Label)> = train
                .iter()
                .flat_map(|a| &a.chapters)
                .filter_map(|c| c.label.map(|l| (field_tokens(&c.title, &c.content, part, config), l)))
                .collect();
            if docs.is_empty() {
                return Err(Error::Training("no labeled chapters to fit features on".into()));
            }
            let full = Vocabulary::fit(docs.iter().map(|(t, l)| (t.as_slice(), *l)), provenance.clone());
            let (method, k) = match part {
                TextField::Title => (config.title_selection, config.title_top_k),
                _ => (config.selection, config.top_k),
            };
            let (vocab, warning) = full.select(method, k)?;
            vocabs.push(vocab);
            warnings.extend(warning);
        }
        let encoder = AdditionalEncoder::new(config.additional.clone())?;
        let pipeline = ClassicPipeline { field, characteristics, config: config.clone(), vocabs, encoder };
        Ok((pipeline, warnings))
    }

    /// Vocabulary of the first block (the title one for title+content).
    pub fn vocab(&self) -> &Vocabulary {
        &self.vocabs[0]
    }

    pub fn vocabs(&self) -> &[Vocabulary] {
        &self.vocabs
    }

    pub fn dim(&self) -> usize {
        self.vocabs.iter().map(Vocabulary::len).sum::<usize>() + self.encoder.output_dim(self.characteristics)
    }

    /// Digest of everything that shapes the feature vectors.
    pub fn digest(&self) -> String {
        crate::digest::digest_json(&(&self.config, self.field, self.characteristics))
    }

    /// One vector per chapter of `article`.
    pub fn transform(&self, article: &Article, role: Role) -> Result<Vec<SparseVector>> {
        if role == Role::Eval {
            self.vocab().provenance().ensure_disjoint([article.id.as_str()])?;
        }
        let positions = if self.characteristics.loc { relative_positions_or_ordinal(article) } else { Vec::new() };
        Ok(article
            .chapters
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let lex = self
                    .field
                    .parts()
                    .iter()
                    .zip(&self.vocabs)
                    .map(|(&part, v)| tfidf_vectorize(&field_tokens(&c.title, &c.content, part, &self.config), v))
                    .reduce(|a, b| a.append(&b))
                    .expect("at least one block");
                if self.characteristics.is_empty() {
                    return lex;
                }
                let loc = positions.get(i).copied().unwrap_or(0.0);
                concat_features(&lex, &self.encoder.encode(loc, c.citation_count, c.figtable_count, self.characteristics))
            })
            .collect())
    }

    /// (vector, gold label) for every labeled chapter.
    pub fn examples(&self, articles: &[Article], role: Role) -> Result<Vec<Example>> {
        if role == Role::Eval {
            self.vocab().provenance().ensure_disjoint(articles.iter().map(|a| a.id.as_str()))?;
        }
        let mut out = Vec::new();
        for a in articles {
            for (x, c) in self.transform(a, role)?.into_iter().zip(&a.chapters) {
                if let Some(l) = c.label {
                    out.push((x, l));
                }
            }
        }
        Ok(out)
    }
}

/// A trained model with everything needed to apply it to new articles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Classic { pipeline: ClassicPipeline, model: ClassicModel },
    Crf { config: FeatureConfig, tagger: CrfTagger },
}

impl TrainedModel {
    pub fn family(&self) -> String {
        match self {
            TrainedModel::Classic { model, .. } => model.family().name().to_ascii_lowercase(),
            TrainedModel::Crf { .. } => "crf".into(),
        }
    }

    pub fn feature_config(&self) -> &FeatureConfig {
        match self {
            TrainedModel::Classic { pipeline, .. } => &pipeline.config,
            TrainedModel::Crf { config, .. } => config,
        }
    }

    pub fn training_articles(&self) -> &Provenance {
        match self {
            TrainedModel::Classic { pipeline, .. } => pipeline.vocab().provenance(),
            TrainedModel::Crf { tagger, .. } => tagger.dict.provenance(),
        }
    }

    /// Predicted label per chapter.
    pub fn predict_article(&self, article: &Article) -> Result<Vec<Label>> {
        match self {
            TrainedModel::Classic { pipeline, model } => {
                pipeline.transform(article, Role::Eval)?.iter().map(|x| model.predict(x)).collect()
            }
            TrainedModel::Crf { tagger, .. } => tagger.predict(article),
        }
    }

    pub fn to_artifact(&self, seed: u64) -> Result<Artifact> {
        let (feature_dim, mut extra) = match self {
            TrainedModel::Classic { pipeline, .. } => {
                let mut extra = BTreeMap::new();
                extra.insert("field".to_string(), pipeline.field.as_str().to_string());
                extra.insert("characteristics".to_string(), pipeline.characteristics.suffix());
                (pipeline.dim(), extra)
            }
            TrainedModel::Crf { tagger, .. } => (tagger.dict.len(), BTreeMap::new()),
        };
        extra.insert("body".into(), "json".into());
        Ok(Artifact {
            header: ArtifactHeader {
                family: self.family(),
                feature_dim,
                classes: Label::ALL.to_vec(),
                config_digest: self.feature_config().digest(),
                seed,
                extra,
            },
            body: serde_json::to_vec(self)?,
        })
    }

    pub fn from_artifact(artifact: &Artifact) -> Result<TrainedModel> {
        let mut m: TrainedModel = serde_json::from_slice(&artifact.body)?;
        if m.family() != artifact.header.family {
            return Err(Error::Artifact(format!(
                "header says `{}` but body holds `{}`",
                artifact.header.family,
                m.family()
            )));
        }
        if m.feature_config().digest() != artifact.header.config_digest {
            return Err(Error::Artifact("body feature config does not match header digest".into()));
        }
        if let TrainedModel::Crf { tagger, .. } = &mut m {
            tagger.finish_load();
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path, seed: u64) -> Result<()> {
        self.to_artifact(seed)?.write(path)
    }

    /// Loads an artifact, refusing it if `expected_digest` differs from the
    /// digest it was built under.
    pub fn load(path: &Path, expected_digest: Option<&str>) -> Result<TrainedModel> {
        let a = Artifact::read(path)?;
        if let Some(d) = expected_digest {
            a.expect_digest(d)?;
        }
        Self::from_artifact(&a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::{ClassicConfig, Family};
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn fit_transform_and_leakage_guard() {
        let (arts, _) = generate(&SynthConfig { articles: 30, ..Default::default() }).unwrap();
        let (train, test) = arts.split_at(24);
        let (p, _) = ClassicPipeline::fit(train, TextField::Title, Characteristics::LOC, &FeatureConfig::default()).unwrap();
        let ex = p.examples(test, Role::Eval).unwrap();
        assert!(ex.iter().all(|(x, _)| x.dim() == p.dim()));
        assert_eq!(p.dim(), p.vocab().len() + 10);
        assert!(matches!(p.examples(train, Role::Eval), Err(Error::Leakage(_))));
        assert!(p.examples(train, Role::Train).is_ok());
    }

    #[test]
    fn title_content_concatenates_both_blocks() {
        let (arts, _) = generate(&SynthConfig { articles: 30, ..Default::default() }).unwrap();
        let (train, test) = arts.split_at(24);
        let cfg = FeatureConfig::default();
        let fit = |f| ClassicPipeline::fit(train, f, Characteristics::ALL, &cfg).unwrap().0;
        let (t, c, tc) = (fit(TextField::Title), fit(TextField::Content), fit(TextField::TitleContent));
        assert_eq!(tc.dim(), t.vocab().len() + c.vocab().len() + 30);
        let (xt, xc, xtc) = (
            &t.transform(&test[0], Role::Eval).unwrap()[0],
            &c.transform(&test[0], Role::Eval).unwrap()[0],
            &tc.transform(&test[0], Role::Eval).unwrap()[0],
        );
        let (lt, _) = xt.split_at(t.vocab().len());
        let (head, rest) = xtc.split_at(t.vocab().len());
        assert_eq!(head, lt);
        assert_eq!(&rest, xc);
    }

    #[test]
    fn artifact_round_trip_and_digest_refusal() {
        let (arts, _) = generate(&SynthConfig { articles: 20, ..Default::default() }).unwrap();
        let (train, test) = arts.split_at(15);
        let cfg = FeatureConfig::default();
        let (p, _) = ClassicPipeline::fit(train, TextField::Title, Characteristics::NONE, &cfg).unwrap();
        let model = ClassicModel::train(Family::Nb, &p.examples(train, Role::Train).unwrap(), &ClassicConfig::default()).unwrap();
        let tm = TrainedModel::Classic { pipeline: p, model };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nb.model");
        tm.save(&path, 42).unwrap();
        let back = TrainedModel::load(&path, Some(&cfg.digest())).unwrap();
        assert!(back == tm, "artifact round trip changed the model");
        assert_eq!(back.predict_article(&test[0]).unwrap(), tm.predict_article(&test[0]).unwrap());
        let other = FeatureConfig { top_k: 10, ..cfg.clone() };
        assert!(matches!(TrainedModel::load(&path, Some(&other.digest())), Err(Error::Artifact(_))));

        let tagger = CrfTagger::train(train, &Default::default()).unwrap();
        let crf = TrainedModel::Crf { config: cfg.clone(), tagger };
        crf.save(&path, 1).unwrap();
        let back = TrainedModel::load(&path, None).unwrap();
        assert_eq!(back.predict_article(&test[0]).unwrap(), crf.predict_article(&test[0]).unwrap());
    }
}
