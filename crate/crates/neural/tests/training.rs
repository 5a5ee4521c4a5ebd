use chapterfn_core::{Article, Chapter, Label};
use chapterfn_neural::data::{encode_article, Caps, TokenVocab};
use chapterfn_neural::train::{confusion, train_network};
use chapterfn_neural::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CLASSES: [(Label, &str); 4] = [
    (Label::Introduction, "introduction"),
    (Label::RelatedWork, "background"),
    (Label::Method, "approach"),
    (Label::Conclusion, "conclusions"),
];
const FILLER: [&str; 6] = ["on", "the", "our", "a", "study", "notes"];

/// Articles whose chapter titles each hold one class keyword among filler.
fn separable(n: usize, seed: u64, prefix: &str) -> Vec<Article> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let chapters = CLASSES
                .iter()
                .enumerate()
                .map(|(k, (label, kw))| {
                    let a = FILLER[rng.random_range(0..FILLER.len())];
                    let b = FILLER[rng.random_range(0..FILLER.len())];
                    Chapter::new(k as u32 + 1, format!("{a} {kw} {b}"), format!("{b} text {a}.")).with_label(*label)
                })
                .collect();
            Article { id: format!("{prefix}{i}"), year: None, venue: None, chapters }
        })
        .collect()
}

fn title_spec() -> ModelSpec {
    ModelSpec::new(FusionSpec::baseline(Base::Title), ContentEncoder::Hierarchical)
}

#[test]
fn separable_titles_reach_full_validation_accuracy() {
    let (train, valid) = (separable(30, 1, "t"), separable(8, 2, "v"));
    let m = NeuralModel::fit(&train, &valid, title_spec(), Hyper::default()).unwrap();
    assert!(m.history.epochs.len() <= 50);
    let enc: Vec<_> = valid.iter().map(|a| m.encode(a)).collect();
    let cm = confusion(&m.net, &enc).unwrap();
    assert_eq!(cm.accuracy(), 1.0, "history: {:?}", m.history);
}

#[test]
fn dropout_free_training_is_reproducible() {
    let (train, valid) = (separable(6, 3, "t"), separable(2, 4, "v"));
    let hyper = Hyper { dropout: 0.0, max_epochs: 4, patience: 4, lstm_hidden: 8, cnn_filters: 6, embed_dim: 8, ..Hyper::default() };
    let spec = ModelSpec::new(
        FusionSpec { window: 1, direction: Direction::Both, base: Base::Title, fusion_encoder: FusionEncoder::Bilstm },
        ContentEncoder::Hierarchical,
    );
    let a = NeuralModel::fit(&train, &valid, spec, hyper.clone()).unwrap();
    let b = NeuralModel::fit(&train, &valid, spec, hyper).unwrap();
    let losses = |m: &NeuralModel| m.history.epochs.iter().map(|e| e.train_loss).collect::<Vec<_>>();
    assert_eq!(losses(&a), losses(&b));
    assert_eq!(a.net.params, b.net.params);
}

#[test]
fn padding_rows_stay_zero_under_both_optimizers() {
    let train: Vec<Article> = separable(6, 5, "t")
        .into_iter()
        .map(|mut a| {
            // Empty titles feed the padding id through the embedding.
            a.chapters[0].title.clear();
            a
        })
        .collect();
    let valid = separable(2, 6, "v");
    for optimizer in [Optimizer::Sgd, Optimizer::Adam] {
        let hyper = Hyper { max_epochs: 5, patience: 5, optimizer, embed_dim: 6, cnn_filters: 4, ..Hyper::default() };
        let vocab = TokenVocab::fit(&train, 1);
        let enc = |xs: &[Article]| xs.iter().map(|a| encode_article(a, &vocab, &Caps::default())).collect::<Vec<_>>();
        let mut net = Network::new(title_spec(), hyper, vocab.size()).unwrap();
        train_network(&mut net, &enc(&train), &enc(&valid)).unwrap();
        let table = net.params.get(net.embedding().table);
        assert!(table.row(0).iter().all(|&v| v == 0.0), "{optimizer:?}");
        assert!(table.row(2).iter().any(|&v| v != 0.0));
    }
}

#[test]
fn artifact_round_trip_and_guards() {
    let (train, valid) = (separable(4, 7, "t"), separable(2, 8, "v"));
    let hyper = Hyper { max_epochs: 2, patience: 2, lstm_hidden: 4, cnn_filters: 3, embed_dim: 5, ..Hyper::default() };
    let spec = ModelSpec::new(
        FusionSpec { window: 1, direction: Direction::Previous, base: Base::TitleContent, fusion_encoder: FusionEncoder::Cnn },
        ContentEncoder::HierarchicalAttention,
    );
    let m = NeuralModel::fit(&train, &valid, spec, hyper).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.model");
    m.save(&path).unwrap();
    let back = NeuralModel::load(&path, Some(&m.digest())).unwrap();
    assert!(back == m, "round trip changed the model");
    for a in &valid {
        assert_eq!(back.predict_article(a).unwrap(), m.predict_article(a).unwrap());
    }
    assert!(NeuralModel::load(&path, Some("0000")).is_err());

    let mut art = m.to_artifact().unwrap();
    let shapes = art.header.extra.get("shapes").unwrap().replacen("dense.b=1x6", "dense.b=1x7", 1);
    art.header.extra.insert("shapes".into(), shapes);
    assert!(NeuralModel::from_artifact(&art).is_err());
    let mut art = m.to_artifact().unwrap();
    art.body.truncate(art.body.len() - 8);
    assert!(NeuralModel::from_artifact(&art).is_err());
}

#[test]
fn overlapping_validation_is_refused() {
    let train = separable(3, 9, "t");
    assert!(NeuralModel::fit(&train, &train[..1], title_spec(), Hyper::default()).is_err());
}
