use serde::{Deserialize, Serialize};

use super::{check_dims, check_finite, Example};
use crate::corpus::{Label, NUM_LABELS};
use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    dim: usize,
    points: Vec<SparseVector>,
    labels: Vec<Label>,
}

pub fn train_knn(data: &[Example], k: usize) -> Result<KnnModel> {
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    let dim = check_dims(data)?;
    check_finite(data)?;
    Ok(KnnModel {
        k,
        dim,
        points: data.iter().map(|(x, _)| x.clone()).collect(),
        labels: data.iter().map(|(_, l)| *l).collect(),
    })
}

impl KnnModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Indices of the `k` most cosine-similar training points, nearest
    /// first; equal similarity keeps the lower training index first.
    pub fn neighbours(&self, x: &SparseVector) -> Result<Vec<usize>> {
        if x.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: x.dim() });
        }
        let nx = x.norm();
        let mut sims: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = nx * p.norm();
                (if d > 0.0 { x.dot(p) / d } else { 0.0 }, i)
            })
            .collect();
        sims.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        sims.truncate(self.k);
        Ok(sims.into_iter().map(|(_, i)| i).collect())
    }
}

/// Majority label among the nearest neighbours. Among tied labels, the one
/// appearing earliest in the neighbour ranking wins.
pub fn knn_predict(model: &KnnModel, x: &SparseVector) -> Result<Label> {
    let nn = model.neighbours(x)?;
    let mut votes = [0usize; NUM_LABELS];
    for &i in &nn {
        votes[model.labels[i].index()] += 1;
    }
    let top = *votes.iter().max().expect("nonempty");
    let winner = nn
        .iter()
        .map(|&i| model.labels[i])
        .find(|l| votes[l.index()] == top)
        .expect("some neighbour carries the top label");
    Ok(winner)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(a: f64, b: f64) -> SparseVector {
        SparseVector::from_dense(&[a, b])
    }

    #[test]
    fn majority_of_seven() {
        let mut data = Vec::new();
        for i in 0..4 {
            data.push((pt(1.0, 0.1 * i as f64), Label::Method));
        }
        for i in 0..3 {
            data.push((pt(1.0, 0.05 + 0.1 * i as f64), Label::EvalResult));
        }
        let m = train_knn(&data, 7).unwrap();
        assert_eq!(knn_predict(&m, &pt(1.0, 0.0)).unwrap(), Label::Method);
        // EvalResult is nearest to this query but loses 3:4.
        assert_eq!(knn_predict(&m, &pt(1.0, 0.26)).unwrap(), Label::Method);
    }

    #[test]
    fn vote_tie_goes_to_nearest() {
        let data = vec![(pt(1.0, 0.0), Label::Method), (pt(0.0, 1.0), Label::Other)];
        let m = train_knn(&data, 2).unwrap();
        assert_eq!(knn_predict(&m, &pt(0.2, 1.0)).unwrap(), Label::Other);
        assert_eq!(knn_predict(&m, &pt(1.0, 0.2)).unwrap(), Label::Method);
    }

    #[test]
    fn similarity_tie_prefers_lower_index() {
        let data = vec![(pt(1.0, 0.0), Label::Conclusion), (pt(2.0, 0.0), Label::Method)];
        let m = train_knn(&data, 1).unwrap();
        assert_eq!(m.neighbours(&pt(3.0, 0.0)).unwrap(), vec![0]);
    }

    #[test]
    fn k_larger_than_training_set() {
        let data = vec![(pt(1.0, 0.0), Label::Method)];
        let m = train_knn(&data, 7).unwrap();
        assert_eq!(knn_predict(&m, &pt(0.0, 0.0)).unwrap(), Label::Method);
    }
}
