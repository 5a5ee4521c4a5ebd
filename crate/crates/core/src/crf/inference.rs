//! Linear-chain inference over dense potentials. `unary[t][y]` and
//! `trans[a * n + b]` (score of label `a` followed by `b`).

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub(crate) struct ForwardBackward {
    pub log_z: f64,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
}

pub(crate) fn forward_backward(unary: &[Vec<f64>], trans: &[f64], n: usize) -> ForwardBackward {
    let len = unary.len();
    let mut alpha = vec![vec![0.0; n]; len];
    alpha[0].copy_from_slice(&unary[0]);
    let mut buf = vec![0.0; n];
    for t in 1..len {
        for b in 0..n {
            for a in 0..n {
                buf[a] = alpha[t - 1][a] + trans[a * n + b];
            }
            alpha[t][b] = unary[t][b] + log_sum_exp(&buf);
        }
    }
    let mut beta = vec![vec![0.0; n]; len];
    for t in (0..len - 1).rev() {
        for a in 0..n {
            for b in 0..n {
                buf[b] = trans[a * n + b] + unary[t + 1][b] + beta[t + 1][b];
            }
            beta[t][a] = log_sum_exp(&buf);
        }
    }
    let log_z = log_sum_exp(&alpha[len - 1]);
    ForwardBackward { log_z, alpha, beta }
}

impl ForwardBackward {
    pub fn node_marginals(&self) -> Vec<Vec<f64>> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| {
                let mut p: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x + y - self.log_z).exp()).collect();
                let s: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= s);
                p
            })
            .collect()
    }

    /// Expected transition counts summed over positions.
    pub fn edge_marginals(&self, unary: &[Vec<f64>], trans: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for t in 1..unary.len() {
            for a in 0..n {
                for b in 0..n {
                    out[a * n + b] +=
                        (self.alpha[t - 1][a] + trans[a * n + b] + unary[t][b] + self.beta[t][b] - self.log_z).exp();
                }
            }
        }
        out
    }
}

pub(crate) fn viterbi(unary: &[Vec<f64>], trans: &[f64], n: usize) -> Vec<usize> {
    let len = unary.len();
    let mut delta = unary[0].clone();
    let mut back = vec![vec![0usize; n]; len];
    for t in 1..len {
        let mut next = vec![0.0; n];
        for b in 0..n {
            let mut best = (f64::NEG_INFINITY, 0);
            for a in 0..n {
                let s = delta[a] + trans[a * n + b];
                if s > best.0 {
                    best = (s, a);
                }
            }
            next[b] = unary[t][b] + best.0;
            back[t][b] = best.1;
        }
        delta = next;
    }
    let mut y = 0;
    for b in 1..n {
        if delta[b] > delta[y] {
            y = b;
        }
    }
    let mut path = vec![y; len];
    for t in (1..len).rev() {
        path[t - 1] = back[t][path[t]];
    }
    path
}
