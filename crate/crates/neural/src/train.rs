//! Mini-batch training with early stopping on validation macro-F1.

use chapterfn_core::metrics::{macro_metrics, ConfusionMatrix};
use chapterfn_core::{Error, Label, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::EncodedArticle;
use crate::model::{DropoutCtx, Network, Optimizer};
use crate::tape::{Grads, ParamStore, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean cross-entropy per labeled training chapter.
    pub train_loss: f64,
    pub valid_macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_valid_macro_f1: f64,
}

enum OptState {
    Sgd,
    Adam { m: Grads, v: Grads, t: i32 },
}

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl OptState {
    fn new(kind: Optimizer, params: &ParamStore) -> Self {
        match kind {
            Optimizer::Sgd => OptState::Sgd,
            Optimizer::Adam => OptState::Adam { m: params.zero_grads(), v: params.zero_grads(), t: 0 },
        }
    }

    fn step(&mut self, params: &mut ParamStore, g: &Grads, lr: f64) {
        if let OptState::Adam { t, .. } = self {
            *t += 1;
        }
        for id in params.ids().collect::<Vec<_>>() {
            let gi = g.get(id);
            let frozen = (0..gi.len()).take_while(|&i| params.is_frozen(id, i)).count();
            let p = params.get_mut(id);
            match self {
                OptState::Sgd => {
                    for (w, d) in p.data.iter_mut().zip(&gi.data).skip(frozen) {
                        *w -= lr * d;
                    }
                }
                OptState::Adam { m, v, t } => {
                    let (c1, c2) = (1.0 - ADAM_B1.powi(*t), 1.0 - ADAM_B2.powi(*t));
                    let (mi, vi) = (&mut m.values[id.0].data, &mut v.values[id.0].data);
                    for k in frozen..p.data.len() {
                        let d = gi.data[k];
                        mi[k] = ADAM_B1 * mi[k] + (1.0 - ADAM_B1) * d;
                        vi[k] = ADAM_B2 * vi[k] + (1.0 - ADAM_B2) * d * d;
                        p.data[k] -= lr * (mi[k] / c1) / ((vi[k] / c2).sqrt() + ADAM_EPS);
                    }
                }
            }
        }
    }
}

/// Confusion matrix of `net` over the labeled chapters of `articles`.
pub fn confusion(net: &Network, articles: &[EncodedArticle]) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new();
    for a in articles {
        for (pred, c) in net.predict(a)?.into_iter().zip(&a.chapters) {
            if let Some(gold) = c.label {
                cm.add(gold, pred);
            }
        }
    }
    Ok(cm)
}

fn labeled(a: &EncodedArticle) -> usize {
    a.chapters.iter().filter(|c| c.label.is_some()).count()
}

/// Trains `net` in place and leaves it at the best-validation parameters.
///
/// Batches are whole articles, filled until they hold at least
/// `batch_size` labeled chapters. The batch loss is the sum over those
/// chapters, so the learning rate acts per example. Dropout and shuffling
/// draw from the hyperparameter seed.
pub fn train_network(net: &mut Network, train: &[EncodedArticle], valid: &[EncodedArticle]) -> Result<TrainHistory> {
    if train.iter().map(labeled).sum::<usize>() == 0 {
        return Err(Error::InvalidInput("no labeled training chapters".into()));
    }
    if valid.iter().map(labeled).sum::<usize>() == 0 {
        return Err(Error::InvalidInput("no labeled validation chapters".into()));
    }
    let hyper = net.hyper.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed ^ 0x7261_696e);
    let mut opt = OptState::new(hyper.optimizer, &net.params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory { best_valid_macro_f1: f64::NEG_INFINITY, ..Default::default() };
    let mut best = net.params.clone();
    let mut stale = 0;
    for epoch in 1..=hyper.max_epochs {
        order.shuffle(&mut rng);
        let mut total_loss = 0.0;
        let mut total_n = 0usize;
        let mut start = 0;
        while start < order.len() {
            let mut end = start;
            let mut n = 0;
            while end < order.len() && n < hyper.batch_size {
                n += labeled(&train[order[end]]);
                end += 1;
            }
            if n > 0 {
                let mut grads = net.params.zero_grads();
                let mut batch_loss = 0.0;
                for &ai in &order[start..end] {
                    let mut tape = Tape::new(&net.params);
                    let ctx = DropoutCtx { rate: hyper.dropout, rng: &mut rng };
                    if let Some(loss) = net.article_loss(&mut tape, &train[ai], Some(ctx))? {
                        batch_loss += tape.value(loss).data[0];
                        tape.backward(loss, &mut grads);
                    }
                }
                if !batch_loss.is_finite() || !grads.is_finite() {
                    return Err(Error::Training(format!(
                        "non-finite loss in epoch {epoch}; the learning rate {} is likely too high for this data",
                        hyper.learning_rate
                    )));
                }
                opt.step(&mut net.params, &grads, hyper.learning_rate);
                total_loss += batch_loss;
                total_n += n;
            }
            start = end;
        }
        let (_, _, f1) = macro_metrics(&confusion(net, valid)?, &Label::SUBSTANTIVE)?;
        let rec = EpochRecord { epoch, train_loss: total_loss / total_n as f64, valid_macro_f1: f1 };
        log::debug!("epoch {epoch}: loss {:.5} valid macro-F1 {:.4}", rec.train_loss, f1);
        history.epochs.push(rec);
        if f1 > history.best_valid_macro_f1 {
            history.best_valid_macro_f1 = f1;
            history.best_epoch = epoch;
            best = net.params.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= hyper.patience {
                break;
            }
        }
    }
    net.params = best;
    Ok(history)
}
