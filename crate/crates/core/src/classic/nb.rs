use serde::{Deserialize, Serialize};

use super::{check_dims, check_finite, present_classes, Example};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SparseVector;

const ALPHA: f64 = 1.0;

/// Multinomial Naive Bayes over (possibly fractional) feature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    classes: Vec<Label>,
    log_prior: Vec<f64>,
    /// `log_likelihood[c][f]` for `classes[c]`.
    log_likelihood: Vec<Vec<f64>>,
}

pub fn train_nb(data: &[Example]) -> Result<NbModel> {
    let dim = check_dims(data)?;
    check_finite(data)?;
    if data.iter().any(|(x, _)| x.entries().iter().any(|&(_, w)| w < 0.0)) {
        return Err(Error::Training("multinomial NB needs nonnegative features".into()));
    }
    let classes = present_classes(data);
    let n = data.len() as f64;
    let mut log_prior = Vec::with_capacity(classes.len());
    let mut log_likelihood = Vec::with_capacity(classes.len());
    for &c in &classes {
        let mut mass = vec![0.0; dim];
        let mut docs = 0usize;
        for (x, _) in data.iter().filter(|(_, l)| *l == c) {
            docs += 1;
            for &(i, w) in x.entries() {
                mass[i] += w;
            }
        }
        let total: f64 = mass.iter().sum::<f64>() + ALPHA * dim as f64;
        log_prior.push((docs as f64 / n).ln());
        log_likelihood.push(mass.iter().map(|m| ((m + ALPHA) / total).ln()).collect());
    }
    Ok(NbModel { classes, log_prior, log_likelihood })
}

impl NbModel {
    pub fn dim(&self) -> usize {
        self.log_likelihood.first().map_or(0, Vec::len)
    }

    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    /// Unnormalised log posterior per class.
    pub fn scores(&self, x: &SparseVector) -> Result<Vec<(Label, f64)>> {
        if x.dim() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok(self
            .classes
            .iter()
            .enumerate()
            .map(|(c, &l)| (l, self.log_prior[c] + x.dot_dense(&self.log_likelihood[c])))
            .collect())
    }

    /// Highest posterior; ties go to the smaller class id.
    pub fn predict(&self, x: &SparseVector) -> Result<Label> {
        let scores = self.scores(x)?;
        let mut best = scores[0];
        for &s in &scores[1..] {
            if s.1 > best.1 {
                best = s;
            }
        }
        Ok(best.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(dim: usize, e: &[(usize, f64)]) -> SparseVector {
        SparseVector::new(dim, e.to_vec()).unwrap()
    }

    fn disjoint() -> Vec<Example> {
        vec![
            (sv(4, &[(0, 1.0)]), Label::Method),
            (sv(4, &[(0, 0.5), (1, 0.5)]), Label::Method),
            (sv(4, &[(2, 1.0)]), Label::Conclusion),
            (sv(4, &[(2, 0.7), (3, 0.7)]), Label::Conclusion),
        ]
    }

    #[test]
    fn single_class_always_predicted() {
        let m = train_nb(&[(sv(3, &[(0, 1.0)]), Label::Other)]).unwrap();
        assert_eq!(m.predict(&sv(3, &[(2, 5.0)])).unwrap(), Label::Other);
        assert_eq!(m.predict(&SparseVector::zeros(3)).unwrap(), Label::Other);
    }

    #[test]
    fn disjoint_indicators_fit_perfectly() {
        let data = disjoint();
        let m = train_nb(&data).unwrap();
        for (x, y) in &data {
            assert_eq!(m.predict(x).unwrap(), *y);
        }
        let p: f64 = m.log_prior().iter().map(|l| l.exp()).sum();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplication_keeps_priors_and_decisions() {
        let data = disjoint();
        let doubled: Vec<Example> = data.iter().chain(data.iter()).cloned().collect();
        let a = train_nb(&data).unwrap();
        let b = train_nb(&doubled).unwrap();
        assert_eq!(a.log_prior(), b.log_prior());
        for (x, _) in &data {
            assert_eq!(a.predict(x).unwrap(), b.predict(x).unwrap());
        }
    }

    #[test]
    fn errors() {
        assert!(train_nb(&[]).is_err());
        let m = train_nb(&disjoint()).unwrap();
        assert!(m.predict(&SparseVector::zeros(3)).is_err());
        assert!(train_nb(&[(sv(2, &[(0, -1.0)]), Label::Method)]).is_err());
    }
}
