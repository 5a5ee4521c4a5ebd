//! Gradient checks over every building block and every fusion architecture,
//! shared by the command line and the acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chapterfn_core::Label;

use crate::data::{Direction, EncodedArticle, EncodedChapter, PAD};
use crate::gradcheck::{check_gradients, GradCheckReport};
use crate::layers::{bilstm_encode, cnn_encode, BiLstm, Cnn, Embedding, Hierarchical};
use crate::model::{Base, ContentEncoder, FusionEncoder, FusionSpec, Hyper, ModelSpec, Network};
use crate::tape::{NodeId, ParamStore, Tape};

#[derive(Debug, Clone)]
pub struct SuiteCase {
    pub name: String,
    pub report: GradCheckReport,
}

/// Finite differences need activations well above round-off: embeddings are
/// scaled up and biases are moved off zero so ReLU kinks are not hit.
fn condition(store: &mut ParamStore, table: crate::tape::ParamId, scale: f64) {
    let m = store.get_mut(table);
    for r in 1..m.rows {
        m.row_mut(r).iter_mut().for_each(|v| *v *= scale);
    }
    for id in store.ids().collect::<Vec<_>>() {
        if store.name(id).ends_with(".b") {
            let m = store.get_mut(id);
            m.data.iter_mut().enumerate().for_each(|(i, v)| *v += 0.37 * ((i % 5) as f64 - 1.9));
        }
    }
}

fn readout(t: &mut Tape, v: NodeId, seed: u64) -> NodeId {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = t.shape(v).1;
    let w = crate::matrix::Matrix::from_vec(1, n, (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect());
    let w = t.constant(w);
    let m = t.mul(v, w);
    t.sum(m)
}

fn block(seed: u64) -> (ParamStore, ChaCha8Rng, Embedding) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = ParamStore::new();
    let e = Embedding::new(&mut s, &mut rng, 10, 3);
    (s, rng, e)
}

fn toy_article() -> EncodedArticle {
    let ch = |t: Vec<usize>, s: Vec<Vec<usize>>, l| EncodedChapter { title: t, sentences: s, label: Some(l) };
    EncodedArticle {
        id: "a1".into(),
        chapters: vec![
            ch(vec![2, 3], vec![vec![4, 5], vec![6]], Label::Introduction),
            ch(vec![7], vec![vec![8, 9, 2]], Label::Method),
            ch(vec![PAD], vec![vec![3, 3]], Label::EvalResult),
            ch(vec![5, 8, 4], vec![vec![7], vec![2, 6]], Label::Conclusion),
        ],
    }
}

fn network_case(name: &str, spec: ModelSpec, trials: usize, eps: f64, seed: u64) -> SuiteCase {
    let hyper = Hyper { lstm_hidden: 3, cnn_filters: 3, embed_dim: 3, ..Hyper::default() };
    let mut net = Network::new(spec, hyper, 10).expect("suite specs are valid");
    let table = net.embedding().table;
    condition(&mut net.params, table, 20.0);
    let a = toy_article();
    let ids: Vec<_> = net.params.ids().collect();
    let report = check_gradients(
        &net.params,
        &ids,
        |t| net.article_loss(t, &a, None).expect("valid article").expect("labeled article"),
        trials,
        eps,
        seed,
    );
    SuiteCase { name: name.into(), report }
}

/// Runs `trials` random central-difference probes on each case.
pub fn gradcheck_suite(trials: usize, eps: f64, seed: u64) -> Vec<SuiteCase> {
    let mut out = Vec::new();
    let ids = [2, 7, PAD, 3, 8];

    let (mut s, mut rng, e) = block(seed);
    let l = BiLstm::new(&mut s, &mut rng, "l", 3, 4);
    condition(&mut s, e.table, 10.0);
    let params: Vec<_> = s.ids().collect();
    let report = check_gradients(
        &s,
        &params,
        |t| {
            let v = bilstm_encode(t, &e, &l, &ids).expect("nonempty");
            readout(t, v, seed + 1)
        },
        trials,
        eps,
        seed,
    );
    out.push(SuiteCase { name: "embedding+bilstm".into(), report });

    for attention in [false, true] {
        let (mut s, mut rng, e) = block(seed + 2);
        let h = Hierarchical::new(&mut s, &mut rng, 3, 3, attention);
        condition(&mut s, e.table, 10.0);
        let params: Vec<_> = s.ids().collect();
        let sents = vec![vec![2, 3, 4], vec![PAD], vec![5, 6]];
        let report = check_gradients(
            &s,
            &params,
            |t| {
                let v = h.encode(t, &e, &sents).expect("nonempty");
                readout(t, v, seed + 3)
            },
            trials,
            eps,
            seed,
        );
        let name = if attention { "hierarchical+attention" } else { "hierarchical" };
        out.push(SuiteCase { name: name.into(), report });
    }

    let (mut s, mut rng, e) = block(seed + 4);
    let c = Cnn::new(&mut s, &mut rng, "cnn", 3, 4, &[1, 2, 3]);
    condition(&mut s, e.table, 10.0);
    let params: Vec<_> = s.ids().collect();
    let report = check_gradients(
        &s,
        &params,
        |t| {
            let v = cnn_encode(t, &e, &c, &[2, 3, 4, 5, 6]);
            readout(t, v, seed + 5)
        },
        trials,
        eps,
        seed,
    );
    out.push(SuiteCase { name: "cnn".into(), report });

    let fusion = |window, direction, base, enc| FusionSpec { window, direction, base, fusion_encoder: enc };
    let hier = ContentEncoder::Hierarchical;
    let cases = [
        ("fusion bilstm over content", ModelSpec::new(fusion(1, Direction::Both, Base::Content, FusionEncoder::Bilstm), hier)),
        ("fusion bilstm over title", ModelSpec::new(fusion(2, Direction::Both, Base::Title, FusionEncoder::Bilstm), hier)),
        ("fusion cnn over title", ModelSpec::new(fusion(1, Direction::Both, Base::Title, FusionEncoder::Cnn), hier)),
        ("fusion cnn over title+content", ModelSpec::new(fusion(1, Direction::Previous, Base::TitleContent, FusionEncoder::Cnn), hier)),
        ("content bilstm", ModelSpec::new(FusionSpec::baseline(Base::Content), ContentEncoder::Bilstm)),
        ("content hierarchical+attention", ModelSpec::new(FusionSpec::baseline(Base::Content), ContentEncoder::HierarchicalAttention)),
        ("content head+tail", ModelSpec::new(FusionSpec::baseline(Base::Content), ContentEncoder::HeadTail(0.3))),
        ("content head", ModelSpec::new(FusionSpec::baseline(Base::Content), ContentEncoder::Head(0.6))),
    ];
    for (i, (name, spec)) in cases.into_iter().enumerate() {
        out.push(network_case(name, spec, trials, eps, seed + 10 + i as u64));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_and_covers_blocks() {
        let cases = gradcheck_suite(20, 1e-5, 3);
        assert_eq!(cases.len(), 12);
        for c in &cases {
            assert_eq!(c.report.entries.len(), 20);
            assert!(c.report.passed(1e-4), "{}: {:?}", c.name, c.report.max_rel_error);
        }
    }
}
