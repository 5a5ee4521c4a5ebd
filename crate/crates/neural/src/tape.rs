//! Reverse-mode automatic differentiation over matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Parameters live
//! in a [`ParamStore`] and are referenced, not copied; [`Tape::backward`]
//! accumulates their gradients into a [`Grads`] of matching shapes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::matrix::{sigmoid, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Matrix>,
    /// Parameters whose row 0 is a fixed padding vector.
    padded: Vec<bool>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        self.names.push(name.into());
        self.values.push(value);
        self.padded.push(false);
        ParamId(self.values.len() - 1)
    }

    /// Adds a lookup table whose row 0 stays fixed at zero.
    pub fn add_padded(&mut self, name: impl Into<String>, mut value: Matrix) -> ParamId {
        value.row_mut(0).fill(0.0);
        let id = self.add(name, value);
        self.padded[id.0] = true;
        id
    }

    /// Whether entry `index` of `id` is frozen (a padding-row entry).
    pub fn is_frozen(&self, id: ParamId, index: usize) -> bool {
        self.padded[id.0] && index < self.values[id.0].cols
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.values[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn n_scalars(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    pub fn zero_grads(&self) -> Grads {
        Grads { values: self.values.iter().map(|m| Matrix::zeros(m.rows, m.cols)).collect() }
    }
}

/// Gradient per parameter, shaped like the store.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub values: Vec<Matrix>,
}

impl Grads {
    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for m in &mut self.values {
            m.data.iter_mut().for_each(|v| *v *= k);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(Matrix::is_finite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

struct LstmCache {
    /// Post-activation gates per step, `[i f g o]` each of width h.
    gates: Vec<Vec<f64>>,
    /// Cell state after each step.
    cells: Vec<Vec<f64>>,
    /// Positions in processing order.
    order: Vec<usize>,
}

enum Op {
    Leaf,
    Param(ParamId),
    Gather(ParamId, Vec<usize>),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Transpose(NodeId),
    SliceRows(NodeId, usize),
    SliceCols(NodeId, usize),
    ConcatRows(Vec<NodeId>),
    ConcatCols(Vec<NodeId>),
    MaxRows(NodeId, Vec<usize>),
    Unfold(NodeId, usize),
    SoftmaxRows(NodeId),
    SumAll(NodeId),
    CrossEntropy(NodeId, usize),
    Lstm { x: NodeId, wx: NodeId, wh: NodeId, b: NodeId, cache: LstmCache },
}

struct Node {
    /// `None` for parameter nodes, whose value lives in the store.
    value: Option<Matrix>,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: HashMap<ParamId, NodeId>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape { params, nodes: Vec::new(), param_nodes: HashMap::new() }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        let n = &self.nodes[id.0];
        match (&n.value, &n.op) {
            (Some(v), _) => v,
            (None, Op::Param(p)) => self.params.get(*p),
            _ => unreachable!("non-parameter node without value"),
        }
    }

    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        self.value(id).shape()
    }

    fn push(&mut self, value: Matrix, op: Op) -> NodeId {
        self.nodes.push(Node { value: Some(value), op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(&n) = self.param_nodes.get(&id) {
            return n;
        }
        self.nodes.push(Node { value: None, op: Op::Param(id) });
        let n = NodeId(self.nodes.len() - 1);
        self.param_nodes.insert(id, n);
        n
    }

    /// Rows `ids` of a parameter table.
    pub fn gather(&mut self, table: ParamId, ids: &[usize]) -> NodeId {
        let t = self.params.get(table);
        let mut out = Matrix::zeros(ids.len(), t.cols);
        for (r, &i) in ids.iter().enumerate() {
            out.row_mut(r).copy_from_slice(t.row(i));
        }
        self.push(out, Op::Gather(table, ids.to_vec()))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        self.push(v, Op::Add(a, b))
    }

    /// Adds the 1×n row `b` to every row of `a`.
    pub fn add_row(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let bv = self.value(b);
        assert_eq!((bv.rows, bv.cols), (1, self.value(a).cols), "add_row shape");
        let mut v = self.value(a).clone();
        for r in 0..v.rows {
            for (x, y) in v.row_mut(r).iter_mut().zip(&bv.data) {
                *x += y;
            }
        }
        self.push(v, Op::AddRow(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.shape(), vb.shape(), "mul shape");
        let v = Matrix::from_vec(va.rows, va.cols, va.data.iter().zip(&vb.data).map(|(x, y)| x * y).collect());
        self.push(v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        let v = self.value(a).map(|x| x * k);
        self.push(v, Op::Scale(a, k))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let va = self.value(a);
        assert!(start + len <= va.rows, "slice_rows range");
        let v = Matrix::from_vec(len, va.cols, va.data[start * va.cols..(start + len) * va.cols].to_vec());
        self.push(v, Op::SliceRows(a, start))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let va = self.value(a);
        assert!(start + len <= va.cols, "slice_cols range");
        let mut v = Matrix::zeros(va.rows, len);
        for r in 0..va.rows {
            v.row_mut(r).copy_from_slice(&va.row(r)[start..start + len]);
        }
        self.push(v, Op::SliceCols(a, start))
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> NodeId {
        let cols = self.value(parts[0]).cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.cols, cols, "concat_rows width");
            data.extend_from_slice(&v.data);
            rows += v.rows;
        }
        self.push(Matrix::from_vec(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut v = Matrix::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let pv = self.value(p);
            assert_eq!(pv.rows, rows, "concat_cols height");
            for r in 0..rows {
                v.row_mut(r)[off..off + pv.cols].copy_from_slice(pv.row(r));
            }
            off += pv.cols;
        }
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    /// Column-wise maximum over rows, 1×cols. Ties pick the first row.
    pub fn max_rows(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        assert!(va.rows > 0, "max over zero rows");
        let mut arg = vec![0usize; va.cols];
        let mut v = va.row(0).to_vec();
        for r in 1..va.rows {
            for (c, x) in va.row(r).iter().enumerate() {
                if *x > v[c] {
                    v[c] = *x;
                    arg[c] = r;
                }
            }
        }
        self.push(Matrix::row_vector(v), Op::MaxRows(a, arg))
    }

    /// Sliding windows of `h` consecutive rows, each flattened into one row:
    /// (T × d) → ((T − h + 1) × h·d).
    pub fn unfold(&mut self, a: NodeId, h: usize) -> NodeId {
        let va = self.value(a);
        assert!(h >= 1 && h <= va.rows, "unfold height");
        let n = va.rows - h + 1;
        let mut v = Matrix::zeros(n, h * va.cols);
        for t in 0..n {
            v.row_mut(t).copy_from_slice(&va.data[t * va.cols..(t + h) * va.cols]);
        }
        self.push(v, Op::Unfold(a, h))
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        let mut v = va.clone();
        for r in 0..v.rows {
            softmax_in_place(v.row_mut(r));
        }
        self.push(v, Op::SoftmaxRows(a))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).data.iter().sum();
        self.push(Matrix::row_vector(vec![s]), Op::SumAll(a))
    }

    /// Negative log-softmax probability of `target` for 1×C logits.
    pub fn cross_entropy(&mut self, logits: NodeId, target: usize) -> NodeId {
        let v = self.value(logits);
        assert_eq!(v.rows, 1, "cross_entropy expects one row");
        let m = v.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + v.data.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        self.push(Matrix::row_vector(vec![lse - v.data[target]]), Op::CrossEntropy(logits, target))
    }

    /// One LSTM direction over the rows of `x` (T × in). Returns T × h hidden
    /// states indexed by input position. With `reverse`, positions are
    /// processed from last to first. Gate layout is `[i f g o]`.
    pub fn lstm(&mut self, x: NodeId, wx: NodeId, wh: NodeId, b: NodeId, reverse: bool) -> NodeId {
        let xv = self.value(x);
        let (wxv, whv, bv) = (self.value(wx), self.value(wh), self.value(b));
        let h = whv.rows;
        assert_eq!((wxv.rows, wxv.cols), (xv.cols, 4 * h), "lstm Wx shape");
        assert_eq!((whv.cols, bv.rows, bv.cols), (4 * h, 1, 4 * h), "lstm Wh/b shape");
        let t_len = xv.rows;
        let xw = xv.matmul(wxv);
        let order: Vec<usize> = if reverse { (0..t_len).rev().collect() } else { (0..t_len).collect() };
        let mut out = Matrix::zeros(t_len, h);
        let mut gates = Vec::with_capacity(t_len);
        let mut cells = Vec::with_capacity(t_len);
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for &t in &order {
            let mut a: Vec<f64> = xw.row(t).iter().zip(&bv.data).map(|(x, b)| x + b).collect();
            for (k, &hp) in h_prev.iter().enumerate() {
                if hp != 0.0 {
                    for (ai, w) in a.iter_mut().zip(whv.row(k)) {
                        *ai += hp * w;
                    }
                }
            }
            for (j, v) in a.iter_mut().enumerate() {
                *v = if (2 * h..3 * h).contains(&j) { v.tanh() } else { sigmoid(*v) };
            }
            let mut c = vec![0.0; h];
            let mut hn = vec![0.0; h];
            for j in 0..h {
                c[j] = a[h + j] * c_prev[j] + a[j] * a[2 * h + j];
                hn[j] = a[3 * h + j] * c[j].tanh();
            }
            out.row_mut(t).copy_from_slice(&hn);
            gates.push(a);
            cells.push(c.clone());
            h_prev = hn;
            c_prev = c;
        }
        self.push(out, Op::Lstm { x, wx, wh, b, cache: LstmCache { gates, cells, order } })
    }

    /// Backpropagates from the scalar node `loss`, adding parameter
    /// gradients into `grads`.
    pub fn backward(&self, loss: NodeId, grads: &mut Grads) {
        assert_eq!(self.shape(loss), (1, 1), "backward needs a scalar");
        let mut g: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        g[loss.0] = Some(Matrix::row_vector(vec![1.0]));
        for i in (0..=loss.0).rev() {
            let Some(gi) = g[i].take() else { continue };
            self.propagate(i, &gi, &mut g, grads);
        }
    }

    fn propagate(&self, i: usize, gi: &Matrix, g: &mut [Option<Matrix>], grads: &mut Grads) {
        fn acc(g: &mut [Option<Matrix>], id: NodeId, m: Matrix) {
            match &mut g[id.0] {
                Some(x) => x.add_assign(&m),
                slot @ None => *slot = Some(m),
            }
        }
        let out = self.nodes[i].value.as_ref();
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Param(p) => grads.values[p.0].add_assign(gi),
            Op::Gather(p, ids) => {
                let gp = &mut grads.values[p.0];
                for (r, &id) in ids.iter().enumerate() {
                    // Row 0 is the padding vector and never learns.
                    if id == 0 {
                        continue;
                    }
                    for (x, y) in gp.row_mut(id).iter_mut().zip(gi.row(r)) {
                        *x += y;
                    }
                }
            }
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                acc(g, *a, gi.matmul_t(vb));
                let mut gb = Matrix::zeros(vb.rows, vb.cols);
                va.t_matmul_into(gi, &mut gb);
                acc(g, *b, gb);
            }
            Op::Add(a, b) => {
                acc(g, *a, gi.clone());
                acc(g, *b, gi.clone());
            }
            Op::AddRow(a, b) => {
                acc(g, *a, gi.clone());
                let mut gb = Matrix::zeros(1, gi.cols);
                for r in 0..gi.rows {
                    for (x, y) in gb.data.iter_mut().zip(gi.row(r)) {
                        *x += y;
                    }
                }
                acc(g, *b, gb);
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let ga = Matrix::from_vec(gi.rows, gi.cols, gi.data.iter().zip(&vb.data).map(|(x, y)| x * y).collect());
                let gb = Matrix::from_vec(gi.rows, gi.cols, gi.data.iter().zip(&va.data).map(|(x, y)| x * y).collect());
                acc(g, *a, ga);
                acc(g, *b, gb);
            }
            Op::Scale(a, k) => acc(g, *a, gi.map(|x| x * k)),
            Op::Sigmoid(a) => {
                let y = out.expect("value");
                let d = gi.data.iter().zip(&y.data).map(|(gv, s)| gv * s * (1.0 - s)).collect();
                acc(g, *a, Matrix::from_vec(gi.rows, gi.cols, d));
            }
            Op::Tanh(a) => {
                let y = out.expect("value");
                let d = gi.data.iter().zip(&y.data).map(|(gv, t)| gv * (1.0 - t * t)).collect();
                acc(g, *a, Matrix::from_vec(gi.rows, gi.cols, d));
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                let d = gi.data.iter().zip(&x.data).map(|(gv, xv)| if *xv > 0.0 { *gv } else { 0.0 }).collect();
                acc(g, *a, Matrix::from_vec(gi.rows, gi.cols, d));
            }
            Op::Transpose(a) => acc(g, *a, gi.transpose()),
            Op::SliceRows(a, start) => {
                let va = self.value(*a);
                let mut ga = Matrix::zeros(va.rows, va.cols);
                ga.data[start * va.cols..(start + gi.rows) * va.cols].copy_from_slice(&gi.data);
                acc(g, *a, ga);
            }
            Op::SliceCols(a, start) => {
                let va = self.value(*a);
                let mut ga = Matrix::zeros(va.rows, va.cols);
                for r in 0..va.rows {
                    ga.row_mut(r)[*start..start + gi.cols].copy_from_slice(gi.row(r));
                }
                acc(g, *a, ga);
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for &p in parts {
                    let (rows, cols) = self.shape(p);
                    acc(g, p, Matrix::from_vec(rows, cols, gi.data[off * cols..(off + rows) * cols].to_vec()));
                    off += rows;
                }
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let (rows, cols) = self.shape(p);
                    let mut gp = Matrix::zeros(rows, cols);
                    for r in 0..rows {
                        gp.row_mut(r).copy_from_slice(&gi.row(r)[off..off + cols]);
                    }
                    acc(g, p, gp);
                    off += cols;
                }
            }
            Op::MaxRows(a, arg) => {
                let (rows, cols) = self.shape(*a);
                let mut ga = Matrix::zeros(rows, cols);
                for (c, &r) in arg.iter().enumerate() {
                    ga.data[r * cols + c] = gi.data[c];
                }
                acc(g, *a, ga);
            }
            Op::Unfold(a, h) => {
                let (rows, cols) = self.shape(*a);
                let mut ga = Matrix::zeros(rows, cols);
                for t in 0..gi.rows {
                    for (x, y) in ga.data[t * cols..(t + h) * cols].iter_mut().zip(gi.row(t)) {
                        *x += y;
                    }
                }
                acc(g, *a, ga);
            }
            Op::SoftmaxRows(a) => {
                let y = out.expect("value");
                let mut ga = Matrix::zeros(y.rows, y.cols);
                for r in 0..y.rows {
                    let (yr, gr) = (y.row(r), gi.row(r));
                    let s: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for (c, x) in ga.row_mut(r).iter_mut().enumerate() {
                        *x = yr[c] * (gr[c] - s);
                    }
                }
                acc(g, *a, ga);
            }
            Op::SumAll(a) => {
                let (rows, cols) = self.shape(*a);
                acc(g, *a, Matrix::from_vec(rows, cols, vec![gi.data[0]; rows * cols]));
            }
            Op::CrossEntropy(logits, target) => {
                let mut p = self.value(*logits).clone();
                softmax_in_place(&mut p.data);
                p.data[*target] -= 1.0;
                acc(g, *logits, p.map(|v| v * gi.data[0]));
            }
            Op::Lstm { x, wx, wh, b, cache } => {
                let (xv, wxv, whv) = (self.value(*x), self.value(*wx), self.value(*wh));
                let h = whv.rows;
                let mut gx = Matrix::zeros(xv.rows, xv.cols);
                let mut gwx = Matrix::zeros(wxv.rows, wxv.cols);
                let mut gwh = Matrix::zeros(whv.rows, whv.cols);
                let mut gb = Matrix::zeros(1, 4 * h);
                let hs = out.expect("value");
                let mut dh_next = vec![0.0; h];
                let mut dc_next = vec![0.0; h];
                let mut da = Matrix::zeros(1, 4 * h);
                for step in (0..cache.order.len()).rev() {
                    let t = cache.order[step];
                    let a = &cache.gates[step];
                    let c = &cache.cells[step];
                    let zero = vec![0.0; h];
                    let (c_prev, h_prev) = if step > 0 {
                        (&cache.cells[step - 1][..], hs.row(cache.order[step - 1]))
                    } else {
                        (&zero[..], &zero[..])
                    };
                    for j in 0..h {
                        let dh = gi.get(t, j) + dh_next[j];
                        let (ig, fg, gg, og) = (a[j], a[h + j], a[2 * h + j], a[3 * h + j]);
                        let tc = c[j].tanh();
                        let dc = dh * og * (1.0 - tc * tc) + dc_next[j];
                        da.data[j] = dc * gg * ig * (1.0 - ig);
                        da.data[h + j] = dc * c_prev[j] * fg * (1.0 - fg);
                        da.data[2 * h + j] = dc * ig * (1.0 - gg * gg);
                        da.data[3 * h + j] = dh * tc * og * (1.0 - og);
                        dc_next[j] = dc * fg;
                    }
                    gb.add_assign(&da);
                    for (k, &xk) in xv.row(t).iter().enumerate() {
                        if xk != 0.0 {
                            for (w, d) in gwx.row_mut(k).iter_mut().zip(&da.data) {
                                *w += xk * d;
                            }
                        }
                    }
                    for (k, &hk) in h_prev.iter().enumerate() {
                        if hk != 0.0 {
                            for (w, d) in gwh.row_mut(k).iter_mut().zip(&da.data) {
                                *w += hk * d;
                            }
                        }
                    }
                    for (k, v) in gx.row_mut(t).iter_mut().enumerate() {
                        *v = crate::matrix::dot(wxv.row(k), &da.data);
                    }
                    for (k, v) in dh_next.iter_mut().enumerate() {
                        *v = crate::matrix::dot(whv.row(k), &da.data);
                    }
                }
                acc(g, *x, gx);
                acc(g, *wx, gwx);
                acc(g, *wh, gwh);
                acc(g, *b, gb);
            }
        }
    }
}

pub fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in v.iter_mut() {
        *x /= s;
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::gradcheck::check_gradients;

    fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    fn weighted_sum(t: &mut Tape, x: NodeId, w: &Matrix) -> NodeId {
        let c = t.constant(w.clone());
        let m = t.mul(x, c);
        t.sum(m)
    }

    #[test]
    fn elementwise_ops_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = ParamStore::new();
        let a = s.add("a", rand_matrix(&mut rng, 3, 4));
        let b = s.add("b", rand_matrix(&mut rng, 4, 5));
        let r = s.add("r", rand_matrix(&mut rng, 1, 5));
        let w = rand_matrix(&mut rng, 3, 5);
        let rep = check_gradients(
            &s,
            &[a, b, r],
            |t| {
                let (pa, pb, pr) = (t.param(a), t.param(b), t.param(r));
                let m = t.matmul(pa, pb);
                let m = t.add_row(m, pr);
                let x = t.sigmoid(m);
                let y = t.tanh(m);
                let z = t.relu(m);
                let p = t.mul(x, y);
                let q = t.add(p, z);
                let q = t.scale(q, 1.7);
                weighted_sum(t, q, &w)
            },
            40,
            1e-5,
            7,
        );
        assert!(rep.passed(1e-4), "{rep:?}");
    }

    #[test]
    fn shape_ops_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = ParamStore::new();
        let a = s.add("a", rand_matrix(&mut rng, 5, 3));
        let b = s.add("b", rand_matrix(&mut rng, 2, 3));
        let w = rand_matrix(&mut rng, 4, 9);
        let rep = check_gradients(
            &s,
            &[a, b],
            |t| {
                let (pa, pb) = (t.param(a), t.param(b));
                let c = t.concat_rows(&[pa, pb]);
                let top = t.slice_rows(c, 1, 4);
                let tt = t.transpose(top);
                let tt = t.transpose(tt);
                let u = t.unfold(c, 3);
                let u = t.slice_rows(u, 0, 4);
                let left = t.slice_cols(u, 0, 6);
                let both = t.concat_cols(&[left, tt]);
                weighted_sum(t, both, &w)
            },
            30,
            1e-5,
            8,
        );
        assert!(rep.passed(1e-4), "{rep:?}");
    }

    #[test]
    fn softmax_max_and_cross_entropy_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = ParamStore::new();
        let a = s.add("a", rand_matrix(&mut rng, 4, 6));
        let w = rand_matrix(&mut rng, 4, 6);
        let rep = check_gradients(
            &s,
            &[a],
            |t| {
                let pa = t.param(a);
                let sm = t.softmax_rows(pa);
                let l1 = weighted_sum(t, sm, &w);
                let mx = t.max_rows(pa);
                let l2 = t.cross_entropy(mx, 2);
                t.add(l1, l2)
            },
            30,
            1e-5,
            9,
        );
        assert!(rep.passed(1e-4), "{rep:?}");
    }

    #[test]
    fn lstm_gradcheck_both_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = ParamStore::new();
        let emb = s.add("emb", rand_matrix(&mut rng, 6, 3));
        let wx = s.add("wx", rand_matrix(&mut rng, 3, 16));
        let wh = s.add("wh", rand_matrix(&mut rng, 4, 16));
        let b = s.add("b", rand_matrix(&mut rng, 1, 16));
        let w = rand_matrix(&mut rng, 5, 8);
        let ids = [1usize, 3, 5, 2, 1];
        let rep = check_gradients(
            &s,
            &[emb, wx, wh, b],
            |t| {
                let x = t.gather(emb, &ids);
                let (pwx, pwh, pb) = (t.param(wx), t.param(wh), t.param(b));
                let f = t.lstm(x, pwx, pwh, pb, false);
                let r = t.lstm(x, pwx, pwh, pb, true);
                let h = t.concat_cols(&[f, r]);
                weighted_sum(t, h, &w)
            },
            60,
            1e-5,
            10,
        );
        assert!(rep.passed(1e-4), "{rep:?}");
    }

    #[test]
    fn padding_row_gets_no_gradient() {
        let mut s = ParamStore::new();
        let emb = s.add("emb", Matrix::from_vec(3, 2, vec![0.0, 0.0, 1.0, 2.0, 3.0, 4.0]));
        let mut g = s.zero_grads();
        let mut t = Tape::new(&s);
        let x = t.gather(emb, &[0, 2, 0, 1]);
        let l = t.sum(x);
        t.backward(l, &mut g);
        assert_eq!(g.get(emb).data, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn lstm_reverse_is_forward_on_reversed_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = ParamStore::new();
        let wx = s.add("wx", rand_matrix(&mut rng, 2, 12));
        let wh = s.add("wh", rand_matrix(&mut rng, 3, 12));
        let b = s.add("b", rand_matrix(&mut rng, 1, 12));
        let x = rand_matrix(&mut rng, 4, 2);
        let mut xr = x.clone();
        for r in 0..4 {
            xr.row_mut(r).copy_from_slice(x.row(3 - r));
        }
        let mut t = Tape::new(&s);
        let (pwx, pwh, pb) = (t.param(wx), t.param(wh), t.param(b));
        let xn = t.constant(x);
        let xrn = t.constant(xr);
        let rev = t.lstm(xn, pwx, pwh, pb, true);
        let fwd = t.lstm(xrn, pwx, pwh, pb, false);
        for r in 0..4 {
            assert_eq!(t.value(rev).row(r), t.value(fwd).row(3 - r));
        }
    }

    #[test]
    fn max_rows_ties_route_to_first_row() {
        let mut s = ParamStore::new();
        let a = s.add("a", Matrix::from_vec(2, 1, vec![1.0, 1.0]));
        let mut g = s.zero_grads();
        let mut t = Tape::new(&s);
        let pa = t.param(a);
        let m = t.max_rows(pa);
        let l = t.sum(m);
        t.backward(l, &mut g);
        assert_eq!(g.get(a).data, vec![1.0, 0.0]);
    }
}
