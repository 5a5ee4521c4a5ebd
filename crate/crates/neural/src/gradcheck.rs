//! Finite-difference verification of tape gradients.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::tape::{NodeId, ParamId, ParamStore, Tape};

/// Denominator floor of the relative error. Entries whose true gradient is
/// below this are compared absolutely, which keeps round-off on vanishing
/// gradients from dominating the report.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckEntry {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

pub fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR)
}

/// Compares analytic and central-difference gradients on `trials` random
/// scalar entries drawn over `params`, skipping frozen padding entries. `loss` must build a deterministic
/// scalar on the tape.
pub fn check_gradients<F>(
    store: &ParamStore,
    params: &[ParamId],
    loss: F,
    trials: usize,
    eps: f64,
    seed: u64,
) -> GradCheckReport
where
    F: Fn(&mut Tape) -> NodeId,
{
    let eval = |s: &ParamStore| {
        let mut t = Tape::new(s);
        let l = loss(&mut t);
        t.value(l).data[0]
    };
    let mut grads = store.zero_grads();
    {
        let mut t = Tape::new(store);
        let l = loss(&mut t);
        t.backward(l, &mut grads);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<(ParamId, usize)> = params
        .iter()
        .flat_map(|&p| (0..store.get(p).len()).filter(move |&i| !store.is_frozen(p, i)).map(move |i| (p, i)))
        .collect();
    let mut work = store.clone();
    let mut entries = Vec::with_capacity(trials);
    for _ in 0..trials {
        let &(p, i) = candidates.choose(&mut rng).expect("no parameters to check");
        let orig = work.get(p).data[i];
        work.get_mut(p).data[i] = orig + eps;
        let up = eval(&work);
        work.get_mut(p).data[i] = orig - eps;
        let down = eval(&work);
        work.get_mut(p).data[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let analytic = grads.get(p).data[i];
        entries.push(GradCheckEntry {
            param: store.name(p).to_string(),
            index: i,
            analytic,
            numeric,
            rel_error: rel_error(analytic, numeric),
        });
    }
    let max_rel_error = entries.iter().map(|e| e.rel_error).fold(0.0, f64::max);
    GradCheckReport { entries, max_rel_error }
}
