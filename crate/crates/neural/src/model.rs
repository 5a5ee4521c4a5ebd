//! Model specifications and the per-article forward pass shared by every
//! neural variant.

use chapterfn_core::{Error, Label, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{context_window, head_tail_slice, reorder_context, Caps, Direction, EncodedArticle, EncodedChapter, ReorderMode};
use crate::layers::{bilstm_encode, cnn_encode, BiLstm, Cnn, Dense, Embedding, Hierarchical};
use crate::matrix::Matrix;
use crate::tape::{NodeId, ParamStore, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Base {
    Title,
    Content,
    TitleContent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionEncoder {
    Bilstm,
    Cnn,
}

/// How chapter content is read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "p")]
pub enum ContentEncoder {
    Bilstm,
    Hierarchical,
    HierarchicalAttention,
    /// Leading and trailing proportion, each through its own Bi-LSTM.
    HeadTail(f64),
    Head(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionSpec {
    /// 0 disables fusion: the current chapter's encoding feeds the dense layer.
    pub window: usize,
    pub direction: Direction,
    pub base: Base,
    pub fusion_encoder: FusionEncoder,
}

impl FusionSpec {
    pub fn baseline(base: Base) -> Self {
        FusionSpec { window: 0, direction: Direction::Both, base, fusion_encoder: FusionEncoder::Cnn }
    }

    pub fn slot_count(&self) -> usize {
        match self.direction {
            Direction::Both => 2 * self.window + 1,
            _ => self.window + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub fusion: FusionSpec,
    pub content: ContentEncoder,
    pub order: ReorderMode,
}

impl ModelSpec {
    pub fn new(fusion: FusionSpec, content: ContentEncoder) -> Self {
        ModelSpec { fusion, content, order: ReorderMode::ArticleOrder }
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.fusion;
        if f.window > 3 {
            return Err(Error::Config(format!("window {} outside 0..=3", f.window)));
        }
        if f.base == Base::TitleContent && f.window > 0 && f.fusion_encoder != FusionEncoder::Cnn {
            return Err(Error::Config("title+content fusion requires the cnn fusion encoder".into()));
        }
        if f.window == 0 && self.order != ReorderMode::ArticleOrder {
            return Err(Error::Config("chapter-order modes need a context window".into()));
        }
        match self.content {
            ContentEncoder::HeadTail(p) if !(p > 0.0 && p <= 0.5) => {
                Err(Error::Config(format!("head+tail proportion {p} outside (0, 0.5]")))
            }
            ContentEncoder::Head(p) if !(p > 0.0 && p <= 1.0) => {
                Err(Error::Config(format!("head proportion {p} outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    pub fn uses_title(&self) -> bool {
        self.fusion.base != Base::Content
    }

    pub fn uses_content(&self) -> bool {
        self.fusion.base != Base::Title
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout: f64,
    pub lstm_hidden: usize,
    pub cnn_filters: usize,
    pub cnn_heights: Vec<usize>,
    pub embed_dim: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub min_count: usize,
    pub caps: Caps,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            learning_rate: 0.01,
            batch_size: 128,
            dropout: 0.5,
            lstm_hidden: 100,
            cnn_filters: 50,
            cnn_heights: vec![1, 2, 3],
            embed_dim: 100,
            max_epochs: 50,
            patience: 5,
            seed: 42,
            optimizer: Optimizer::Sgd,
            min_count: 1,
            caps: Caps::default(),
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("lstm_hidden", self.lstm_hidden),
            ("cnn_filters", self.cnn_filters),
            ("embed_dim", self.embed_dim),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("neural.{name} must be positive")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("neural.learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("neural.dropout must lie in [0, 1)".into()));
        }
        if self.cnn_heights.is_empty() || self.cnn_heights.contains(&0) {
            return Err(Error::Config("neural.cnn_heights must be nonempty and positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ContentNet {
    Flat(BiLstm),
    Hier(Hierarchical),
    HeadTail(BiLstm, BiLstm),
}

#[derive(Debug, Clone, PartialEq)]
enum FusionNet {
    Bilstm(BiLstm),
    Cnn(Cnn),
}

/// A network instance: parameter store plus the layer handles that index it.
/// Construction is a pure function of (spec, hyper, vocab size), so an
/// artifact only needs to carry parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: ModelSpec,
    pub hyper: Hyper,
    pub vocab_size: usize,
    pub params: ParamStore,
    emb: Embedding,
    title: Option<Cnn>,
    content: Option<ContentNet>,
    fusion: Option<FusionNet>,
    dense: Dense,
}

/// Dropout state for a training forward pass.
pub struct DropoutCtx<'r> {
    pub rate: f64,
    pub rng: &'r mut ChaCha8Rng,
}

impl Network {
    pub fn new(spec: ModelSpec, hyper: Hyper, vocab_size: usize) -> Result<Self> {
        spec.validate()?;
        hyper.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let mut params = ParamStore::new();
        let d = hyper.embed_dim;
        let h = hyper.lstm_hidden;
        let emb = Embedding::new(&mut params, &mut rng, vocab_size, d);
        let title = spec
            .uses_title()
            .then(|| Cnn::new(&mut params, &mut rng, "title_cnn", d, hyper.cnn_filters, &hyper.cnn_heights));
        let content = spec.uses_content().then(|| match spec.content {
            ContentEncoder::Bilstm | ContentEncoder::Head(_) => ContentNet::Flat(BiLstm::new(&mut params, &mut rng, "content_lstm", d, h)),
            ContentEncoder::Hierarchical => ContentNet::Hier(Hierarchical::new(&mut params, &mut rng, d, h, false)),
            ContentEncoder::HierarchicalAttention => ContentNet::Hier(Hierarchical::new(&mut params, &mut rng, d, h, true)),
            ContentEncoder::HeadTail(_) => ContentNet::HeadTail(
                BiLstm::new(&mut params, &mut rng, "head_lstm", d, h),
                BiLstm::new(&mut params, &mut rng, "tail_lstm", d, h),
            ),
        });
        let slot_dim = title.as_ref().map_or(0, Cnn::out_dim)
            + match &content {
                None => 0,
                Some(ContentNet::Flat(l)) => l.out_dim(),
                Some(ContentNet::Hier(hn)) => hn.out_dim(),
                Some(ContentNet::HeadTail(a, b)) => a.out_dim() + b.out_dim(),
            };
        let fusion = (spec.fusion.window > 0).then(|| match spec.fusion.fusion_encoder {
            FusionEncoder::Bilstm => FusionNet::Bilstm(BiLstm::new(&mut params, &mut rng, "fusion_lstm", slot_dim, h)),
            FusionEncoder::Cnn => {
                let heights: Vec<usize> = (1..=spec.fusion.slot_count()).collect();
                FusionNet::Cnn(Cnn::new(&mut params, &mut rng, "fusion_cnn", slot_dim, hyper.cnn_filters, &heights))
            }
        });
        let dense_in = match &fusion {
            None => slot_dim,
            Some(FusionNet::Bilstm(l)) => l.out_dim(),
            Some(FusionNet::Cnn(c)) => c.out_dim(),
        };
        let dense = Dense::new(&mut params, &mut rng, "dense", dense_in, Label::ALL.len());
        Ok(Network { spec, hyper, vocab_size, params, emb, title, content, fusion, dense })
    }

    pub fn embedding(&self) -> &Embedding {
        &self.emb
    }

    /// Width of one slot vector.
    pub fn slot_dim(&self) -> usize {
        let t = self.title.as_ref().map_or(0, Cnn::out_dim);
        t + match &self.content {
            None => 0,
            Some(ContentNet::Flat(l)) => l.out_dim(),
            Some(ContentNet::Hier(h)) => h.out_dim(),
            Some(ContentNet::HeadTail(a, b)) => a.out_dim() + b.out_dim(),
        }
    }

    fn encode_content(&self, t: &mut Tape, c: &EncodedChapter) -> Result<NodeId> {
        let net = self.content.as_ref().expect("content encoder present");
        match (net, self.spec.content) {
            (ContentNet::Hier(h), _) => h.encode(t, &self.emb, &c.sentences),
            (ContentNet::Flat(l), ContentEncoder::Head(p)) => {
                let (head, _) = head_tail_slice(&c.flat(), p)?;
                bilstm_encode(t, &self.emb, l, &head)
            }
            (ContentNet::Flat(l), _) => bilstm_encode(t, &self.emb, l, &c.flat()),
            (ContentNet::HeadTail(hl, tl), ContentEncoder::HeadTail(p)) => {
                let (head, tail) = head_tail_slice(&c.flat(), p)?;
                let a = bilstm_encode(t, &self.emb, hl, &head)?;
                // A one-token chapter has an empty tail.
                let b = if tail.is_empty() {
                    t.constant(Matrix::zeros(1, tl.out_dim()))
                } else {
                    bilstm_encode(t, &self.emb, tl, &tail)?
                };
                Ok(t.concat_cols(&[a, b]))
            }
            _ => unreachable!("content network matches its spec"),
        }
    }

    /// Slot vector (1 × slot_dim) of one chapter.
    pub fn encode_chapter(&self, t: &mut Tape, c: &EncodedChapter) -> Result<NodeId> {
        let title = self.title.as_ref().map(|cnn| cnn_encode(t, &self.emb, cnn, &c.title));
        let content = match self.content {
            Some(_) => Some(self.encode_content(t, c)?),
            None => None,
        };
        Ok(match (title, content) {
            (Some(a), Some(b)) => t.concat_cols(&[a, b]),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => unreachable!("every base reads some text"),
        })
    }

    /// Logits of one chapter read in isolation, with no context fusion.
    pub fn chapter_logits(&self, t: &mut Tape, c: &EncodedChapter) -> Result<NodeId> {
        let v = self.encode_chapter(t, c)?;
        Ok(self.dense.apply(t, v))
    }

    /// Seed of the shuffled-order permutation for one chapter; fixed per
    /// (run seed, article, chapter) so training and evaluation agree.
    fn shuffle_seed(&self, article_id: &str, index: usize) -> u64 {
        let d = chapterfn_core::digest::digest_bytes(format!("{}/{article_id}/{index}", self.hyper.seed).as_bytes());
        u64::from_str_radix(&d[..16], 16).expect("hex digest")
    }

    /// Dense-layer input for chapter `i` given all slot vectors.
    pub fn fused(&self, t: &mut Tape, slots: &[NodeId], article_id: &str, i: usize) -> NodeId {
        let f = &self.spec.fusion;
        let Some(fusion) = &self.fusion else { return slots[i] };
        let window = context_window(slots.len(), i, f.window, f.direction);
        let window = reorder_context(&window, self.spec.order, self.shuffle_seed(article_id, i));
        let zero = t.constant(Matrix::zeros(1, self.slot_dim()));
        let rows: Vec<NodeId> = window.slots.iter().map(|s| s.map_or(zero, |j| slots[j])).collect();
        let x = t.concat_rows(&rows);
        match fusion {
            FusionNet::Bilstm(l) => l.read_at(t, x, window.current),
            FusionNet::Cnn(c) => c.encode(t, x),
        }
    }

    /// Class logits (1 × 6) for every chapter of `article`.
    pub fn article_logits(&self, t: &mut Tape, article: &EncodedArticle, mut dropout: Option<DropoutCtx>) -> Result<Vec<NodeId>> {
        let slots = article
            .chapters
            .iter()
            .map(|c| self.encode_chapter(t, c))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(slots.len());
        for i in 0..slots.len() {
            let mut x = self.fused(t, &slots, &article.id, i);
            if let Some(ctx) = dropout.as_mut().filter(|c| c.rate > 0.0) {
                let n = t.shape(x).1;
                let keep = 1.0 / (1.0 - ctx.rate);
                let mask = (0..n).map(|_| if ctx.rng.random::<f64>() < ctx.rate { 0.0 } else { keep }).collect();
                let m = t.constant(Matrix::row_vector(mask));
                x = t.mul(x, m);
            }
            out.push(self.dense.apply(t, x));
        }
        Ok(out)
    }

    /// Summed cross-entropy over the labeled chapters; `None` when the
    /// article has no labels.
    pub fn article_loss(&self, t: &mut Tape, article: &EncodedArticle, dropout: Option<DropoutCtx>) -> Result<Option<NodeId>> {
        let logits = self.article_logits(t, article, dropout)?;
        let terms: Vec<NodeId> = logits
            .iter()
            .zip(&article.chapters)
            .filter_map(|(&l, c)| c.label.map(|y| t.cross_entropy(l, y.index())))
            .collect();
        if terms.is_empty() {
            return Ok(None);
        }
        let stacked = t.concat_rows(&terms);
        Ok(Some(t.sum(stacked)))
    }

    /// Class probabilities per chapter, evaluation mode.
    pub fn predict_proba(&self, article: &EncodedArticle) -> Result<Vec<[f64; 6]>> {
        let mut t = Tape::new(&self.params);
        let logits = self.article_logits(&mut t, article, None)?;
        Ok(logits
            .into_iter()
            .map(|l| {
                let mut p = [0.0; 6];
                p.copy_from_slice(&t.value(l).data);
                crate::tape::softmax_in_place(&mut p);
                p
            })
            .collect())
    }

    /// Arg-max labels; ties go to the smaller class index.
    pub fn predict(&self, article: &EncodedArticle) -> Result<Vec<Label>> {
        Ok(self
            .predict_proba(article)?
            .into_iter()
            .map(|p| {
                let best = (1..6).fold(0, |b, k| if p[k] > p[b] { k } else { b });
                Label::from_index(best).expect("six classes")
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PAD;
    use crate::gradcheck::check_gradients;

    fn tiny_hyper() -> Hyper {
        Hyper { lstm_hidden: 3, cnn_filters: 3, embed_dim: 3, ..Hyper::default() }
    }

    fn article() -> EncodedArticle {
        let ch = |t: Vec<usize>, s: Vec<Vec<usize>>, l| EncodedChapter { title: t, sentences: s, label: Some(l) };
        EncodedArticle {
            id: "a1".into(),
            chapters: vec![
                ch(vec![2, 3], vec![vec![4, 5], vec![6]], Label::Introduction),
                ch(vec![7], vec![vec![8, 9, 2]], Label::Method),
                ch(vec![PAD], vec![vec![3, 3]], Label::Conclusion),
            ],
        }
    }

    /// Scales embeddings up so finite differences stay well above round-off,
    /// and moves zero-initialised biases off the ReLU kink.
    fn boosted(net: &mut Network) {
        let m = net.params.get_mut(net.emb.table);
        for r in 1..m.rows {
            m.row_mut(r).iter_mut().for_each(|v| *v *= 20.0);
        }
        for id in net.params.ids().collect::<Vec<_>>() {
            if net.params.name(id).ends_with(".b") {
                let m = net.params.get_mut(id);
                m.data.iter_mut().enumerate().for_each(|(i, v)| *v += 0.37 * ((i % 5) as f64 - 1.9));
            }
        }
    }

    fn check(spec: ModelSpec) {
        let mut net = Network::new(spec, tiny_hyper(), 10).unwrap();
        boosted(&mut net);
        let a = article();
        let ids: Vec<_> = net.params.ids().collect();
        let rep = check_gradients(
            &net.params,
            &ids,
            |t| net.article_loss(t, &a, None).unwrap().unwrap(),
            40,
            1e-5,
            21,
        );
        assert!(rep.passed(1e-4), "{spec:?}: {rep:?}");
    }

    fn fusion(window: usize, direction: Direction, base: Base, enc: FusionEncoder) -> FusionSpec {
        FusionSpec { window, direction, base, fusion_encoder: enc }
    }

    #[test]
    fn content_fusion_gradcheck() {
        check(ModelSpec::new(fusion(1, Direction::Both, Base::Content, FusionEncoder::Bilstm), ContentEncoder::Hierarchical));
    }

    #[test]
    fn title_fusion_gradcheck_both_encoders() {
        for enc in [FusionEncoder::Bilstm, FusionEncoder::Cnn] {
            check(ModelSpec::new(fusion(1, Direction::Both, Base::Title, enc), ContentEncoder::Hierarchical));
        }
    }

    #[test]
    fn title_content_fusion_gradcheck() {
        check(ModelSpec::new(fusion(2, Direction::Previous, Base::TitleContent, FusionEncoder::Cnn), ContentEncoder::Hierarchical));
    }

    #[test]
    fn content_encoder_variants_gradcheck() {
        for content in [ContentEncoder::Bilstm, ContentEncoder::HierarchicalAttention, ContentEncoder::HeadTail(0.3), ContentEncoder::Head(0.6)] {
            check(ModelSpec::new(FusionSpec::baseline(Base::Content), content));
        }
    }

    #[test]
    fn probabilities_are_distributions() {
        for base in [Base::Title, Base::Content, Base::TitleContent] {
            for enc in [FusionEncoder::Bilstm, FusionEncoder::Cnn] {
                if base == Base::TitleContent && enc == FusionEncoder::Bilstm {
                    continue;
                }
                let spec = ModelSpec::new(fusion(1, Direction::Both, base, enc), ContentEncoder::Hierarchical);
                let net = Network::new(spec, tiny_hyper(), 10).unwrap();
                for p in net.predict_proba(&article()).unwrap() {
                    assert!(p.iter().all(|&x| x >= 0.0));
                    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn window_zero_is_encoder_plus_dense() {
        for base in [Base::Title, Base::Content, Base::TitleContent] {
            let net = Network::new(ModelSpec::new(FusionSpec::baseline(base), ContentEncoder::Hierarchical), tiny_hyper(), 10).unwrap();
            let a = article();
            let mut t = Tape::new(&net.params);
            let fused = net.article_logits(&mut t, &a, None).unwrap();
            for (i, c) in a.chapters.iter().enumerate() {
                let v = net.encode_chapter(&mut t, c).unwrap();
                let direct = net.dense.apply(&mut t, v);
                assert_eq!(t.value(fused[i]).data, t.value(direct).data);
            }
        }
    }

    #[test]
    fn slot_shapes() {
        let spec = ModelSpec::new(fusion(1, Direction::Both, Base::Title, FusionEncoder::Cnn), ContentEncoder::Hierarchical);
        let net = Network::new(spec, Hyper::default(), 10).unwrap();
        assert_eq!(net.slot_dim(), 150);
        let Some(FusionNet::Cnn(c)) = &net.fusion else { panic!() };
        assert_eq!((c.input, c.max_height()), (150, 3));
        let spec = ModelSpec::new(fusion(1, Direction::Both, Base::TitleContent, FusionEncoder::Cnn), ContentEncoder::Hierarchical);
        assert_eq!(Network::new(spec, Hyper::default(), 10).unwrap().slot_dim(), 350);
    }

    #[test]
    fn spec_validation() {
        let bad = ModelSpec::new(fusion(1, Direction::Both, Base::TitleContent, FusionEncoder::Bilstm), ContentEncoder::Hierarchical);
        assert!(bad.validate().is_err());
        let mut ordered = ModelSpec::new(FusionSpec::baseline(Base::Title), ContentEncoder::Hierarchical);
        ordered.order = ReorderMode::CurrentFirstContextShuffled;
        assert!(ordered.validate().is_err());
        assert!(ModelSpec::new(FusionSpec::baseline(Base::Content), ContentEncoder::HeadTail(0.6)).validate().is_err());
        assert!(Hyper { dropout: 1.0, ..Hyper::default() }.validate().is_err());
    }

    #[test]
    fn evaluation_is_deterministic() {
        let spec = ModelSpec::new(fusion(1, Direction::Both, Base::Title, FusionEncoder::Bilstm), ContentEncoder::Hierarchical);
        let net = Network::new(spec, tiny_hyper(), 10).unwrap();
        assert_eq!(net.predict_proba(&article()).unwrap(), net.predict_proba(&article()).unwrap());
    }
}
