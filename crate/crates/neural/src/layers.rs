//! Parameterised building blocks: embeddings, Bi-LSTM, additive attention,
//! convolution with max-over-time pooling and the dense output layer.

use chapterfn_core::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::PAD;
use crate::matrix::Matrix;
use crate::tape::{NodeId, ParamId, ParamStore, Tape};

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-bound..=bound)).collect())
}

/// Embedding table with an all-zero padding row 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Embedding {
    pub table: ParamId,
    pub dim: usize,
}

impl Embedding {
    pub fn new(store: &mut ParamStore, rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Self {
        debug_assert_eq!(PAD, 0);
        Embedding { table: store.add_padded("embedding", uniform(rng, rows, dim, 0.05)), dim }
    }

    pub fn lookup(&self, t: &mut Tape, ids: &[usize]) -> NodeId {
        t.gather(self.table, ids)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmDir {
    pub wx: ParamId,
    pub wh: ParamId,
    pub b: ParamId,
}

impl LstmDir {
    fn new(store: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, input: usize, hidden: usize) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut b = Matrix::zeros(1, 4 * hidden);
        // Forget gate starts open.
        b.data[hidden..2 * hidden].fill(1.0);
        LstmDir {
            wx: store.add(format!("{name}.wx"), uniform(rng, input, 4 * hidden, bound)),
            wh: store.add(format!("{name}.wh"), uniform(rng, hidden, 4 * hidden, bound)),
            b: store.add(format!("{name}.b"), b),
        }
    }

    fn run(&self, t: &mut Tape, x: NodeId, reverse: bool) -> NodeId {
        let (wx, wh, b) = (t.param(self.wx), t.param(self.wh), t.param(self.b));
        t.lstm(x, wx, wh, b, reverse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiLstm {
    pub fwd: LstmDir,
    pub bwd: LstmDir,
    pub hidden: usize,
}

impl BiLstm {
    pub fn new(store: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, input: usize, hidden: usize) -> Self {
        BiLstm {
            fwd: LstmDir::new(store, rng, &format!("{name}.fwd"), input, hidden),
            bwd: LstmDir::new(store, rng, &format!("{name}.bwd"), input, hidden),
            hidden,
        }
    }

    pub fn out_dim(&self) -> usize {
        2 * self.hidden
    }

    /// Forward and backward hidden states, each T × hidden, by position.
    pub fn states(&self, t: &mut Tape, x: NodeId) -> (NodeId, NodeId) {
        (self.fwd.run(t, x, false), self.bwd.run(t, x, true))
    }

    /// Per-position concatenated states, T × 2·hidden.
    pub fn state_matrix(&self, t: &mut Tape, x: NodeId) -> NodeId {
        let (f, b) = self.states(t, x);
        t.concat_cols(&[f, b])
    }

    /// Final forward state (last row) ⊕ final backward state (row 0).
    pub fn encode(&self, t: &mut Tape, x: NodeId) -> NodeId {
        let n = t.shape(x).0;
        let (f, b) = self.states(t, x);
        let last = t.slice_rows(f, n - 1, 1);
        let first = t.slice_rows(b, 0, 1);
        t.concat_cols(&[last, first])
    }

    /// Both directions read at row `pos`.
    pub fn read_at(&self, t: &mut Tape, x: NodeId, pos: usize) -> NodeId {
        let (f, b) = self.states(t, x);
        let a = t.slice_rows(f, pos, 1);
        let c = t.slice_rows(b, pos, 1);
        t.concat_cols(&[a, c])
    }
}

fn non_padding(ids: &[usize]) -> Result<Vec<usize>> {
    if ids.is_empty() {
        return Err(Error::InvalidInput("cannot encode an empty token sequence".into()));
    }
    Ok(ids.iter().copied().filter(|&i| i != PAD).collect())
}

/// Bi-LSTM text encoding, 1 × 2·hidden. Padding ids never touch the state;
/// an all-padding sequence therefore encodes to zeros.
pub fn bilstm_encode(t: &mut Tape, emb: &Embedding, lstm: &BiLstm, ids: &[usize]) -> Result<NodeId> {
    let ids = non_padding(ids)?;
    if ids.is_empty() {
        return Ok(t.constant(Matrix::zeros(1, lstm.out_dim())));
    }
    let x = emb.lookup(t, &ids);
    Ok(lstm.encode(t, x))
}

/// Additive attention pooling: `u = tanh(HW + b)`, `α = softmax(u·c)`,
/// output `αH`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attention {
    pub w: ParamId,
    pub b: ParamId,
    pub ctx: ParamId,
}

impl Attention {
    pub fn new(store: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, dim: usize) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        Attention {
            w: store.add(format!("{name}.w"), uniform(rng, dim, dim, bound)),
            b: store.add(format!("{name}.b"), Matrix::zeros(1, dim)),
            ctx: store.add(format!("{name}.ctx"), uniform(rng, dim, 1, bound)),
        }
    }

    /// Attention weights (1 × T) over the rows of `h`.
    pub fn weights(&self, t: &mut Tape, h: NodeId) -> NodeId {
        let (w, b, c) = (t.param(self.w), t.param(self.b), t.param(self.ctx));
        let u = t.matmul(h, w);
        let u = t.add_row(u, b);
        let u = t.tanh(u);
        let s = t.matmul(u, c);
        let s = t.transpose(s);
        t.softmax_rows(s)
    }

    pub fn pool(&self, t: &mut Tape, h: NodeId) -> NodeId {
        let a = self.weights(t, h);
        t.matmul(a, h)
    }
}

/// Two-level encoder: words within each sentence, then sentences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hierarchical {
    pub word: BiLstm,
    pub sentence: BiLstm,
    pub attention: Option<(Attention, Attention)>,
}

impl Hierarchical {
    pub fn new(store: &mut ParamStore, rng: &mut ChaCha8Rng, input: usize, hidden: usize, attention: bool) -> Self {
        let word = BiLstm::new(store, rng, "word_lstm", input, hidden);
        let sentence = BiLstm::new(store, rng, "sentence_lstm", 2 * hidden, hidden);
        let attention = attention.then(|| {
            (
                Attention::new(store, rng, "word_attention", 2 * hidden),
                Attention::new(store, rng, "sentence_attention", 2 * hidden),
            )
        });
        Hierarchical { word, sentence, attention }
    }

    pub fn out_dim(&self) -> usize {
        self.sentence.out_dim()
    }

    pub fn encode(&self, t: &mut Tape, emb: &Embedding, sentences: &[Vec<usize>]) -> Result<NodeId> {
        if sentences.is_empty() {
            return Err(Error::InvalidInput("cannot encode a chapter without sentences".into()));
        }
        let mut rows = Vec::with_capacity(sentences.len());
        for s in sentences {
            let ids = non_padding(s)?;
            let v = if ids.is_empty() {
                t.constant(Matrix::zeros(1, self.word.out_dim()))
            } else {
                let x = emb.lookup(t, &ids);
                match &self.attention {
                    Some((wa, _)) => {
                        let h = self.word.state_matrix(t, x);
                        wa.pool(t, h)
                    }
                    None => self.word.encode(t, x),
                }
            };
            rows.push(v);
        }
        let s = t.concat_rows(&rows);
        Ok(match &self.attention {
            Some((_, sa)) => {
                let h = self.sentence.state_matrix(t, s);
                sa.pool(t, h)
            }
            None => self.sentence.encode(t, s),
        })
    }
}

/// Convolution over rows with one filter bank per height, ReLU and
/// max-over-time pooling; output 1 × filters·heights.
#[derive(Debug, Clone, PartialEq)]
pub struct Cnn {
    pub banks: Vec<(usize, ParamId, ParamId)>,
    pub filters: usize,
    pub input: usize,
}

impl Cnn {
    pub fn new(store: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, input: usize, filters: usize, heights: &[usize]) -> Self {
        let banks = heights
            .iter()
            .map(|&h| {
                let bound = (6.0 / (h * input + filters) as f64).sqrt();
                let w = store.add(format!("{name}.h{h}.w"), uniform(rng, h * input, filters, bound));
                let b = store.add(format!("{name}.h{h}.b"), Matrix::zeros(1, filters));
                (h, w, b)
            })
            .collect();
        Cnn { banks, filters, input }
    }

    pub fn out_dim(&self) -> usize {
        self.filters * self.banks.len()
    }

    pub fn max_height(&self) -> usize {
        self.banks.iter().map(|b| b.0).max().unwrap_or(1)
    }

    /// `x` must have at least `max_height` rows.
    pub fn encode(&self, t: &mut Tape, x: NodeId) -> NodeId {
        let parts: Vec<NodeId> = self
            .banks
            .iter()
            .map(|&(h, w, b)| {
                let u = t.unfold(x, h);
                let (w, b) = (t.param(w), t.param(b));
                let z = t.matmul(u, w);
                let z = t.add_row(z, b);
                let z = t.relu(z);
                t.max_rows(z)
            })
            .collect();
        t.concat_cols(&parts)
    }
}

/// CNN text encoding; short inputs are padded up to the tallest filter.
pub fn cnn_encode(t: &mut Tape, emb: &Embedding, cnn: &Cnn, ids: &[usize]) -> NodeId {
    let mut ids = ids.to_vec();
    if ids.len() < cnn.max_height() {
        ids.resize(cnn.max_height(), PAD);
    }
    let x = emb.lookup(t, &ids);
    cnn.encode(t, x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
}

impl Dense {
    pub fn new(store: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, input: usize, output: usize) -> Self {
        let bound = (6.0 / (input + output) as f64).sqrt();
        Dense {
            w: store.add(format!("{name}.w"), uniform(rng, input, output, bound)),
            b: store.add(format!("{name}.b"), Matrix::zeros(1, output)),
        }
    }

    pub fn apply(&self, t: &mut Tape, x: NodeId) -> NodeId {
        let (w, b) = (t.param(self.w), t.param(self.b));
        let z = t.matmul(x, w);
        t.add_row(z, b)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::gradcheck::check_gradients;

    fn setup(vocab: usize, dim: usize) -> (ParamStore, ChaCha8Rng, Embedding) {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut s = ParamStore::new();
        let mut e = Embedding::new(&mut s, &mut rng, vocab, dim);
        // Larger embeddings keep gradients away from round-off.
        let m = s.get_mut(e.table);
        for r in 1..m.rows {
            m.row_mut(r).iter_mut().for_each(|v| *v *= 10.0);
        }
        e.dim = dim;
        (s, rng, e)
    }

    fn readout(t: &mut Tape, v: NodeId, seed: u64) -> NodeId {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = t.shape(v).1;
        let w = t.constant(uniform(&mut rng, 1, n, 1.0));
        let m = t.mul(v, w);
        t.sum(m)
    }

    #[test]
    fn bilstm_shape_zero_weights_and_padding() {
        let (mut s, mut rng, e) = setup(8, 4);
        let l = BiLstm::new(&mut s, &mut rng, "l", 4, 100);
        let mut t = Tape::new(&s);
        let v = bilstm_encode(&mut t, &e, &l, &[3, 4, 5]).unwrap();
        assert_eq!(t.shape(v), (1, 200));
        assert!(bilstm_encode(&mut t, &e, &l, &[]).is_err());
        let z = bilstm_encode(&mut t, &e, &l, &[PAD, PAD]).unwrap();
        assert!(t.value(z).data.iter().all(|&x| x == 0.0));
        let with_pad = bilstm_encode(&mut t, &e, &l, &[3, PAD, 4, 5, PAD]).unwrap();
        assert_eq!(t.value(with_pad), t.value(v));

        let mut zero = s.clone();
        for id in zero.ids().collect::<Vec<_>>() {
            if zero.name(id).starts_with("l.") {
                zero.get_mut(id).data.fill(0.0);
            }
        }
        let mut t = Tape::new(&zero);
        let v = bilstm_encode(&mut t, &e, &l, &[3, 4]).unwrap();
        assert!(t.value(v).data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn padding_contributes_no_gradient() {
        let (mut s, mut rng, e) = setup(8, 3);
        let l = BiLstm::new(&mut s, &mut rng, "l", 3, 4);
        let grads_for = |ids: &[usize]| {
            let mut g = s.zero_grads();
            let mut t = Tape::new(&s);
            let v = bilstm_encode(&mut t, &e, &l, ids).unwrap();
            let loss = readout(&mut t, v, 1);
            t.backward(loss, &mut g);
            g
        };
        assert_eq!(grads_for(&[2, 5, 6]), grads_for(&[PAD, 2, PAD, 5, 6, PAD]));
    }

    #[test]
    fn embedding_and_bilstm_gradcheck() {
        let (mut s, mut rng, e) = setup(9, 3);
        let l = BiLstm::new(&mut s, &mut rng, "l", 3, 4);
        let ids: Vec<_> = s.ids().collect();
        let rep = check_gradients(
            &s,
            &ids,
            |t| {
                let v = bilstm_encode(t, &e, &l, &[2, 7, PAD, 3, 8]).unwrap();
                readout(t, v, 2)
            },
            40,
            1e-5,
            3,
        );
        assert!(rep.passed(1e-4), "{rep:?}");
    }

    #[test]
    fn hierarchical_gradcheck_with_and_without_attention() {
        for attention in [false, true] {
            let (mut s, mut rng, e) = setup(9, 3);
            let h = Hierarchical::new(&mut s, &mut rng, 3, 3, attention);
            let ids: Vec<_> = s.ids().collect();
            let sents = vec![vec![2, 3, 4], vec![PAD], vec![5, 6]];
            let rep = check_gradients(
                &s,
                &ids,
                |t| {
                    let v = h.encode(t, &e, &sents).unwrap();
                    readout(t, v, 4)
                },
                40,
                1e-5,
                5,
            );
            assert!(rep.passed(1e-4), "attention={attention}: {rep:?}");
        }
    }

    #[test]
    fn hierarchical_degenerate_and_attention_weights() {
        let (mut s, mut rng, e) = setup(9, 3);
        let h = Hierarchical::new(&mut s, &mut rng, 3, 5, false);
        let mut t = Tape::new(&s);
        let v = h.encode(&mut t, &e, &[vec![4]]).unwrap();
        let x = e.lookup(&mut t, &[4]);
        let inner = h.word.encode(&mut t, x);
        let outer = h.sentence.encode(&mut t, inner);
        assert_eq!(t.value(v), t.value(outer));
        assert_eq!(t.shape(v), (1, 10));
        assert!(h.encode(&mut t, &e, &[]).is_err());

        let ha = Hierarchical::new(&mut s, &mut rng, 3, 5, true);
        let mut t = Tape::new(&s);
        let x = e.lookup(&mut t, &[2, 3, 4, 5]);
        let states = ha.word.state_matrix(&mut t, x);
        let (att, _) = ha.attention.unwrap();
        let a = att.weights(&mut t, states);
        let a = t.value(a);
        assert_eq!(a.shape(), (1, 4));
        assert!(a.data.iter().all(|&x| x >= 0.0));
        assert!((a.data.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cnn_shapes_padding_and_gradcheck() {
        let (mut s, mut rng, e) = setup(9, 4);
        let c = Cnn::new(&mut s, &mut rng, "cnn", 4, 50, &[1, 2, 3]);
        let mut t = Tape::new(&s);
        for ids in [vec![2], vec![2, 3, 4, 5, 6, 7, 8]] {
            let v = cnn_encode(&mut t, &e, &c, &ids);
            assert_eq!(t.shape(v), (1, 150));
        }
        let v = cnn_encode(&mut t, &e, &c, &[PAD, PAD]);
        let expected: Vec<f64> = c.banks.iter().flat_map(|&(_, _, b)| s.get(b).data.iter().map(|x| x.max(0.0))).collect();
        assert_eq!(t.value(v).data, expected);

        let (mut s, mut rng, e) = setup(9, 3);
        let c = Cnn::new(&mut s, &mut rng, "cnn", 3, 4, &[1, 2, 3]);
        // Non-zero biases so ReLU is exercised on both sides.
        for &(_, _, b) in &c.banks {
            s.get_mut(b).data.iter_mut().enumerate().for_each(|(i, v)| *v = 0.3 * i as f64 - 0.4);
        }
        let ids: Vec<_> = s.ids().collect();
        let rep = check_gradients(
            &s,
            &ids,
            |t| {
                let v = cnn_encode(t, &e, &c, &[2, 3, 4, 5, 6]);
                readout(t, v, 6)
            },
            40,
            1e-5,
            7,
        );
        assert!(rep.passed(1e-4), "{rep:?}");
    }
}
