//! Article-level data splits. Chapters of one article never straddle splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    KFold(usize),
    /// 8:1:1 train/valid/test.
    Holdout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub seed: u64,
}

/// Indices into the article list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Split {
    KFold(Vec<Vec<usize>>),
    Holdout { train: Vec<usize>, valid: Vec<usize>, test: Vec<usize> },
}

impl Split {
    /// (train, test) index pairs, one per fold; holdout yields one pair.
    pub fn train_test(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        match self {
            Split::KFold(folds) => (0..folds.len())
                .map(|k| {
                    let mut train: Vec<usize> =
                        folds.iter().enumerate().filter(|(j, _)| *j != k).flat_map(|(_, f)| f.iter().copied()).collect();
                    train.sort_unstable();
                    let mut test = folds[k].clone();
                    test.sort_unstable();
                    (train, test)
                })
                .collect(),
            Split::Holdout { train, test, .. } => vec![(train.clone(), test.clone())],
        }
    }
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

pub fn make_split(n_articles: usize, plan: &SplitPlan) -> Result<Split> {
    match plan.kind {
        SplitKind::KFold(k) => {
            if k < 2 {
                return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
            }
            if n_articles < k {
                return Err(Error::InvalidInput(format!("{n_articles} articles cannot fill {k} folds")));
            }
            let mut folds = vec![Vec::new(); k];
            for (pos, i) in shuffled(n_articles, plan.seed).into_iter().enumerate() {
                folds[pos % k].push(i);
            }
            Ok(Split::KFold(folds))
        }
        SplitKind::Holdout => {
            if n_articles < 3 {
                return Err(Error::InvalidInput(format!("{n_articles} articles cannot fill an 8:1:1 split")));
            }
            let tenth = ((n_articles as f64) / 10.0).round().max(1.0) as usize;
            let order = shuffled(n_articles, plan.seed);
            let (test, rest) = order.split_at(tenth);
            let (valid, train) = rest.split_at(tenth);
            Ok(Split::Holdout { train: train.to_vec(), valid: valid.to_vec(), test: test.to_vec() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_into_five() {
        let s = make_split(10, &SplitPlan { kind: SplitKind::KFold(5), seed: 1 }).unwrap();
        let Split::KFold(folds) = &s else { panic!() };
        assert!(folds.iter().all(|f| f.len() == 2));
        let mut all: Vec<usize> = folds.concat();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(s, make_split(10, &SplitPlan { kind: SplitKind::KFold(5), seed: 1 }).unwrap());
        for (train, test) in s.train_test() {
            assert_eq!(train.len() + test.len(), 10);
            assert!(test.iter().all(|t| !train.contains(t)));
        }
    }

    #[test]
    fn holdout_proportions() {
        let Split::Holdout { train, valid, test } = make_split(500, &SplitPlan { kind: SplitKind::Holdout, seed: 3 }).unwrap()
        else {
            panic!()
        };
        assert_eq!((train.len(), valid.len(), test.len()), (400, 50, 50));
        let mut all = [train, valid, test].concat();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 500);
    }

    #[test]
    fn too_few_articles() {
        assert!(make_split(4, &SplitPlan { kind: SplitKind::KFold(5), seed: 0 }).is_err());
        assert!(make_split(2, &SplitPlan { kind: SplitKind::Holdout, seed: 0 }).is_err());
    }
}
