//! One-vs-one linear models. Each pair `(a, b)` with `a < b` is a binary
//! problem where `a` is the positive class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dims, check_finite, present_classes, Example};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Logistic,
    Hinge,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseConfig {
    pub loss: Loss,
    pub c: f64,
    pub max_iters: usize,
    /// Relative objective change below which optimisation stops.
    pub tol: f64,
}

impl Default for PairwiseConfig {
    fn default() -> Self {
        PairwiseConfig::for_loss(Loss::Logistic)
    }
}

impl PairwiseConfig {
    /// The averaged subgradient iterate moves by O(1/epoch) forever, so the
    /// hinge solver gets a looser stopping tolerance than the smooth one.
    pub fn for_loss(loss: Loss) -> Self {
        let tol = match loss {
            Loss::Logistic => 1e-6,
            Loss::Hinge => 1e-4,
        };
        PairwiseConfig { loss, c: 1.0, max_iters: 1000, tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub pos: Label,
    pub neg: Label,
    pub w: Vec<f64>,
    pub b: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl PairModel {
    pub fn margin(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.w) + self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseLinearModel {
    pub dim: usize,
    pub loss: Loss,
    pub c: f64,
    pub classes: Vec<Label>,
    pub pairs: Vec<PairModel>,
}

/// Per-class voting summary from [`predict_ovo`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OvoScore {
    pub label: Label,
    pub votes: usize,
    /// Sum of |margin| over pairs this class won.
    pub margin: f64,
}

pub fn train_pairwise(data: &[Example], cfg: &PairwiseConfig) -> Result<PairwiseLinearModel> {
    let dim = check_dims(data)?;
    check_finite(data)?;
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(Error::Config(format!("C must be positive, got {}", cfg.c)));
    }
    if cfg.max_iters == 0 {
        return Err(Error::Config("max_iters must be positive".into()));
    }
    let classes = present_classes(data);
    if classes.len() < 2 {
        return Err(Error::Training(format!("need at least two classes, found {}", classes.len())));
    }
    let mut jobs = Vec::new();
    for (i, &a) in classes.iter().enumerate() {
        for &b in &classes[i + 1..] {
            jobs.push((a, b));
        }
    }
    let pairs = jobs
        .par_iter()
        .map(|&(a, b)| {
            let sub: Vec<(&SparseVector, f64)> = data
                .iter()
                .filter_map(|(x, l)| match *l {
                    l if l == a => Some((x, 1.0)),
                    l if l == b => Some((x, -1.0)),
                    _ => None,
                })
                .collect();
            let (w, bias, iterations, converged) = match cfg.loss {
                Loss::Logistic => fit_logistic(&sub, dim, cfg),
                Loss::Hinge => fit_hinge(&sub, dim, cfg),
            };
            if w.iter().any(|v| !v.is_finite()) || !bias.is_finite() {
                return Err(Error::NonFinite(format!("weights of pair {a}/{b}")));
            }
            if !converged {
                log::warn!("pair {a}/{b} did not converge in {iterations} iterations");
            }
            Ok(PairModel { pos: a, neg: b, w, b: bias, iterations, converged })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairwiseLinearModel { dim, loss: cfg.loss, c: cfg.c, classes, pairs })
}

/// Majority vote over pairwise decisions. A zero margin casts no vote.
/// Ties on votes go to the larger summed winning margin, then to the
/// smaller class id.
pub fn predict_ovo(model: &PairwiseLinearModel, x: &SparseVector) -> Result<(Label, Vec<OvoScore>)> {
    if x.dim() != model.dim {
        return Err(Error::DimMismatch { expected: model.dim, got: x.dim() });
    }
    let mut scores: Vec<OvoScore> =
        model.classes.iter().map(|&label| OvoScore { label, votes: 0, margin: 0.0 }).collect();
    let slot = |l: Label| model.classes.iter().position(|&c| c == l).expect("pair class in model");
    for p in &model.pairs {
        let m = p.margin(x);
        let winner = if m > 0.0 {
            p.pos
        } else if m < 0.0 {
            p.neg
        } else {
            continue;
        };
        let s = &mut scores[slot(winner)];
        s.votes += 1;
        s.margin += m.abs();
    }
    let mut best = scores[0];
    for &s in &scores[1..] {
        if s.votes > best.votes || (s.votes == best.votes && s.margin > best.margin) {
            best = s;
        }
    }
    Ok((best.label, scores))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^{-z}) without overflow.
fn log1p_exp_neg(z: f64) -> f64 {
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// L2-regularised logistic regression with an unregularised bias, by
/// full-batch gradient descent with Armijo backtracking.
fn fit_logistic(data: &[(&SparseVector, f64)], dim: usize, cfg: &PairwiseConfig) -> (Vec<f64>, f64, usize, bool) {
    let c = cfg.c;
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut margins = vec![0.0; data.len()];
    let objective = |wsq: f64, margins: &[f64]| -> f64 {
        0.5 * wsq + c * data.iter().zip(margins).map(|((_, y), m)| log1p_exp_neg(y * m)).sum::<f64>()
    };
    let mut wsq = 0.0;
    let mut f = objective(wsq, &margins);
    let mut step: f64 = 1.0;
    let mut g = vec![0.0; dim];
    let mut gx = vec![0.0; data.len()];
    let mut trial = vec![0.0; data.len()];
    for it in 1..=cfg.max_iters {
        g.copy_from_slice(&w);
        let mut gb = 0.0;
        for ((x, y), m) in data.iter().zip(&margins) {
            let coef = -c * y * sigmoid(-y * m);
            gb += coef;
            for &(i, v) in x.entries() {
                g[i] += coef * v;
            }
        }
        let gsq: f64 = g.iter().map(|v| v * v).sum::<f64>() + gb * gb;
        if gsq.sqrt() < 1e-10 {
            return (w, b, it, true);
        }
        let wg: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
        for (k, (x, _)) in data.iter().enumerate() {
            gx[k] = x.dot_dense(&g) + gb;
        }
        step = (step * 2.0).min(1e6);
        let f_new = loop {
            for k in 0..data.len() {
                trial[k] = margins[k] - step * gx[k];
            }
            let trial_wsq = wsq - 2.0 * step * wg + step * step * (gsq - gb * gb);
            let ft = objective(trial_wsq, &trial);
            if ft <= f - 0.5 * step * gsq || step < 1e-16 {
                break ft;
            }
            step *= 0.5;
        };
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= step * gi;
        }
        b -= step * gb;
        std::mem::swap(&mut margins, &mut trial);
        wsq = w.iter().map(|v| v * v).sum();
        let rel = (f - f_new) / f.abs().max(1e-12);
        f = f_new;
        if rel.abs() < cfg.tol {
            return (w, b, it, true);
        }
    }
    (w, b, cfg.max_iters, false)
}

/// Primal SVM by stochastic subgradient steps in fixed example order,
/// returning the average of the end-of-epoch iterates. The bias is an
/// extra constant-one feature and shares the L2 penalty.
fn fit_hinge(data: &[(&SparseVector, f64)], dim: usize, cfg: &PairwiseConfig) -> (Vec<f64>, f64, usize, bool) {
    let n = data.len() as f64;
    let lambda = 1.0 / (cfg.c * n);
    // w = scale * v; last slot of v is the bias.
    let mut v = vec![0.0; dim + 1];
    let mut scale = 1.0;
    let mut avg = vec![0.0; dim + 1];
    let mut t = 1.0f64;
    let objective = |wb: &[f64]| -> f64 {
        let (w, b) = wb.split_at(dim);
        let reg = 0.5 * wb.iter().map(|x| x * x).sum::<f64>();
        reg + cfg.c * data.iter().map(|(x, y)| (1.0 - y * (x.dot_dense(w) + b[0])).max(0.0)).sum::<f64>()
    };
    let mut f_prev = f64::INFINITY;
    for epoch in 1..=cfg.max_iters {
        for (x, y) in data {
            t += 1.0;
            let eta = 1.0 / (lambda * t);
            let m = scale * (x.dot_dense(&v[..dim]) + v[dim]);
            scale *= 1.0 - 1.0 / t;
            if y * m < 1.0 {
                let k = eta * y / scale;
                for &(i, val) in x.entries() {
                    v[i] += k * val;
                }
                v[dim] += k;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                scale = 1.0;
            }
        }
        let k = 1.0 / epoch as f64;
        for (a, vi) in avg.iter_mut().zip(&v) {
            *a += (scale * vi - *a) * k;
        }
        let f = objective(&avg);
        if epoch > 1 && ((f_prev - f) / f.abs().max(1e-12)).abs() < cfg.tol {
            let b = avg[dim];
            avg.truncate(dim);
            return (avg, b, epoch, true);
        }
        f_prev = f;
    }
    let b = avg[dim];
    avg.truncate(dim);
    (avg, b, cfg.max_iters, false)
}
