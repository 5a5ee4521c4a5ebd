use std::collections::BTreeMap;

use super::Label;
use crate::error::{Error, Result};

/// Two annotators' labels for the same ordered items.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationPair {
    pub items: Vec<(String, Label, Label)>,
}

impl AnnotationPair {
    pub fn new(items: Vec<(String, Label, Label)>) -> Self {
        AnnotationPair { items }
    }

    pub fn from_labels(a: &[Label], b: &[Label]) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::AnnotationLength(a.len(), b.len()));
        }
        Ok(AnnotationPair {
            items: a
                .iter()
                .zip(b)
                .enumerate()
                .map(|(i, (&x, &y))| (i.to_string(), x, y))
                .collect(),
        })
    }
}

/// Cohen's kappa between the two annotators of `pair`.
pub fn cohen_kappa(pair: &AnnotationPair) -> Result<f64> {
    let (a, b): (Vec<Label>, Vec<Label>) = pair.items.iter().map(|(_, x, y)| (*x, *y)).unzip();
    cohen_kappa_slices(&a, &b)
}

/// Cohen's kappa over any pair of equally long label sequences.
///
/// Chance agreement comes from each annotator's marginal label distribution.
/// Perfect observed agreement always yields exactly 1.0.
pub fn cohen_kappa_slices<T: Ord + Clone>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::AnnotationLength(a.len(), b.len()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();
    if agree == a.len() {
        return Ok(1.0);
    }
    let po = agree as f64 / n;
    let mut marg: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    for x in a {
        marg.entry(x).or_default().0 += 1;
    }
    for y in b {
        marg.entry(y).or_default().1 += 1;
    }
    let pe: f64 = marg
        .values()
        .map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum();
    if pe >= 1.0 {
        return Err(Error::UndefinedKappa { observed: po });
    }
    Ok((po - pe) / (1.0 - pe))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn xy(counts: [(Label, Label, usize); 4]) -> (Vec<Label>, Vec<Label>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y, n) in counts {
            for _ in 0..n {
                a.push(x);
                b.push(y);
            }
        }
        (a, b)
    }

    #[test]
    fn perfect_agreement_is_one() {
        let a = vec![Label::Method; 10];
        assert_eq!(cohen_kappa_slices(&a, &a).unwrap(), 1.0);
        let mixed: Vec<Label> = (0..10).map(|i| Label::ALL[i % 6]).collect();
        let pair = AnnotationPair::from_labels(&mixed, &mixed).unwrap();
        assert_eq!(cohen_kappa(&pair).unwrap(), 1.0);
    }

    #[test]
    fn two_by_two_hand_case() {
        // po = 0.8, pe = 0.6*0.6 + 0.4*0.4 = 0.52
        let (x, y) = (Label::Introduction, Label::Method);
        let (a, b) = xy([(x, x, 5), (x, y, 1), (y, x, 1), (y, y, 3)]);
        let k = cohen_kappa_slices(&a, &b).unwrap();
        assert!((k - 0.28 / 0.48).abs() < 1e-12, "{k}");
        assert!((k - 0.583333).abs() < 1e-6);
    }

    #[test]
    fn degenerate_chance_agreement() {
        // Both annotators use one class each but disagree: pe = 0, fine.
        let a = vec![Label::Method; 4];
        let b = vec![Label::Other; 4];
        assert_eq!(cohen_kappa_slices(&a, &b).unwrap(), 0.0);
        assert!(cohen_kappa_slices::<Label>(&[], &[]).is_err());
        assert!(cohen_kappa_slices(&a, &b[..3]).is_err());
    }

    #[test]
    fn symmetric_and_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(2..40);
            let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let b: Vec<usize> = a
                .iter()
                .map(|&x| if rng.random_bool(0.6) { x } else { rng.random_range(0..4) })
                .collect();
            let Ok(k) = cohen_kappa_slices(&a, &b) else { continue };
            let k2 = cohen_kappa_slices(&b, &a).unwrap();
            assert!((k - k2).abs() < 1e-12);
            let perm = [2usize, 0, 3, 1];
            let pa: Vec<usize> = a.iter().map(|&x| perm[x]).collect();
            let pb: Vec<usize> = b.iter().map(|&x| perm[x]).collect();
            assert!((k - cohen_kappa_slices(&pa, &pb).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_uniform_annotators_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<Label> = (0..100_000).map(|_| Label::ALL[rng.random_range(0..6)]).collect();
        let b: Vec<Label> = (0..100_000).map(|_| Label::ALL[rng.random_range(0..6)]).collect();
        let k = cohen_kappa_slices(&a, &b).unwrap();
        assert!(k.abs() < 0.02, "{k}");
    }
}
