//! Confusion matrices and macro-averaged precision/recall/F1.
//!
//! Macro F1 is the harmonic mean of macro precision and macro recall. It is
//! not the mean of the per-class F1 values.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, NUM_LABELS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[gold][predicted]`.
    counts: [[u64; NUM_LABELS]; NUM_LABELS],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Label, Label)>>(pairs: I) -> Self {
        let mut cm = Self::new();
        for (g, p) in pairs {
            cm.add(g, p);
        }
        cm
    }

    pub fn add(&mut self, gold: Label, predicted: Label) {
        self.counts[gold.index()][predicted.index()] += 1;
    }

    pub fn add_count(&mut self, gold: Label, predicted: Label, n: u64) {
        self.counts[gold.index()][predicted.index()] += n;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for g in 0..NUM_LABELS {
            for p in 0..NUM_LABELS {
                self.counts[g][p] += other.counts[g][p];
            }
        }
    }

    pub fn get(&self, gold: Label, predicted: Label) -> u64 {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_LABELS).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total()).0
    }

    pub fn tp(&self, c: Label) -> u64 {
        self.get(c, c)
    }

    pub fn fp(&self, c: Label) -> u64 {
        (0..NUM_LABELS).filter(|&g| g != c.index()).map(|g| self.counts[g][c.index()]).sum()
    }

    pub fn fn_(&self, c: Label) -> u64 {
        (0..NUM_LABELS).filter(|&p| p != c.index()).map(|p| self.counts[c.index()][p]).sum()
    }

    pub fn support(&self, c: Label) -> u64 {
        self.counts[c.index()].iter().sum()
    }
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn harmonic(p: f64, r: f64) -> (f64, bool) {
    if p + r == 0.0 {
        (0.0, true)
    } else {
        (2.0 * p * r / (p + r), false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Which of P, R, F1 came from a 0/0.
    pub undefined: [bool; 3],
    pub support: u64,
}

pub fn per_class_prf(cm: &ConfusionMatrix, c: Label) -> ClassMetrics {
    let tp = cm.tp(c);
    let (precision, up) = ratio(tp, tp + cm.fp(c));
    let (recall, ur) = ratio(tp, tp + cm.fn_(c));
    let (f1, uf) = harmonic(precision, recall);
    ClassMetrics { label: c, precision, recall, f1, undefined: [up, ur, uf], support: cm.support(c) }
}

/// (macro_P, macro_R, macro_F1) over `classes`.
pub fn macro_metrics(cm: &ConfusionMatrix, classes: &[Label]) -> Result<(f64, f64, f64)> {
    let per: Vec<ClassMetrics> = classes.iter().map(|&c| per_class_prf(cm, c)).collect();
    macro_from(&per)
}

pub fn macro_from(per: &[ClassMetrics]) -> Result<(f64, f64, f64)> {
    if per.is_empty() {
        return Err(Error::InvalidInput("macro average over an empty class set".into()));
    }
    let n = per.len() as f64;
    let p = per.iter().map(|m| m.precision).sum::<f64>() / n;
    let r = per.iter().map(|m| m.recall).sum::<f64>() / n;
    Ok((p, r, harmonic(p, r).0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_classes: Vec<Label>,
    pub macro_p: f64,
    pub macro_r: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub n: u64,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    /// Per-class rows cover all six labels; the macro uses `macro_classes`.
    pub fn from_confusion(cm: ConfusionMatrix, macro_classes: &[Label]) -> Result<Self> {
        let per_class: Vec<ClassMetrics> = Label::ALL.iter().map(|&c| per_class_prf(&cm, c)).collect();
        let chosen: Vec<ClassMetrics> = per_class.iter().filter(|m| macro_classes.contains(&m.label)).copied().collect();
        let (macro_p, macro_r, macro_f1) = macro_from(&chosen)?;
        Ok(MetricsReport {
            per_class,
            macro_classes: macro_classes.to_vec(),
            macro_p,
            macro_r,
            macro_f1,
            accuracy: cm.accuracy(),
            n: cm.total(),
            confusion: cm,
        })
    }

    pub fn class(&self, l: Label) -> &ClassMetrics {
        &self.per_class[l.index()]
    }

    /// CSV rows (no header) for one experiment/fold: one per class, then `macro`.
    pub fn csv_rows(&self, experiment: &str, fold: &str) -> String {
        let mut s = String::new();
        for m in &self.per_class {
            let _ = writeln!(s, "{experiment},{fold},{},{:.6},{:.6},{:.6}", m.label, m.precision, m.recall, m.f1);
        }
        let _ = writeln!(s, "{experiment},{fold},macro,{:.6},{:.6},{:.6}", self.macro_p, self.macro_r, self.macro_f1);
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<14} {:>9} {:>9} {:>9} {:>7}", "class", "precision", "recall", "f1", "support");
        for m in &self.per_class {
            let flag = if m.undefined.iter().any(|&u| u) { " *" } else { "" };
            let _ = writeln!(
                s,
                "{:<14} {:>9.4} {:>9.4} {:>9.4} {:>7}{flag}",
                m.label.as_str(),
                m.precision,
                m.recall,
                m.f1,
                m.support
            );
        }
        let names: Vec<&str> = self.macro_classes.iter().map(|l| l.as_str()).collect();
        let _ = writeln!(
            s,
            "{:<14} {:>9.4} {:>9.4} {:>9.4} {:>7}   over [{}]",
            "macro",
            self.macro_p,
            self.macro_r,
            self.macro_f1,
            self.n,
            names.join(", ")
        );
        let _ = writeln!(s, "accuracy {:.4}", self.accuracy);
        s
    }
}

pub const CSV_HEADER: &str = "experiment,fold,class,precision,recall,f1";

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use Label::*;

    #[test]
    fn perfect_diagonal() {
        let cm = ConfusionMatrix::from_pairs(Label::ALL.iter().map(|&l| (l, l)));
        for l in Label::ALL {
            let m = per_class_prf(&cm, l);
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn never_predicted_class_is_flagged() {
        let cm = ConfusionMatrix::from_pairs([(Method, Other), (Other, Other)]);
        let m = per_class_prf(&cm, Method);
        assert_eq!((m.precision, m.recall), (0.0, 0.0));
        assert!(m.undefined[0] && !m.undefined[1]);
    }

    #[test]
    fn hand_counts() {
        let mut cm = ConfusionMatrix::new();
        cm.add_count(Method, Method, 3);
        cm.add_count(Other, Method, 1);
        cm.add_count(Method, Conclusion, 3);
        let m = per_class_prf(&cm, Method);
        assert!((m.precision - 0.75).abs() < 1e-12);
        assert!((m.recall - 0.5).abs() < 1e-12);
        assert!((m.f1 - 0.6).abs() < 1e-12);
    }

    #[test]
    fn macro_hand_example() {
        // Class A: P=0.5 R=0.5. Class B: P=1.0 R=0.5.
        let mut cm = ConfusionMatrix::new();
        cm.add_count(Method, Method, 1);
        cm.add_count(Method, Other, 1);
        cm.add_count(Other, Method, 1);
        cm.add_count(Conclusion, Conclusion, 1);
        cm.add_count(Conclusion, Other, 1);
        let (p, r, f) = macro_metrics(&cm, &[Method, Conclusion]).unwrap();
        assert!((p - 0.75).abs() < 1e-12 && (r - 0.5).abs() < 1e-12 && (f - 0.6).abs() < 1e-12);
        let mean_f1 = (per_class_prf(&cm, Method).f1 + per_class_prf(&cm, Conclusion).f1) / 2.0;
        assert!((mean_f1 - 0.6).abs() > 1e-3);
    }

    #[test]
    fn report_uses_five_class_macro() {
        let cm = ConfusionMatrix::from_pairs([(Method, Method), (Other, Method)]);
        let r = MetricsReport::from_confusion(cm, &Label::SUBSTANTIVE).unwrap();
        assert_eq!(r.per_class.len(), 6);
        assert_eq!(r.macro_classes.len(), 5);
        assert!((r.macro_p - 0.1).abs() < 1e-12);
        assert!(r.csv_rows("x", "0").lines().count() == 7);
        assert!(macro_metrics(&ConfusionMatrix::new(), &[]).is_err());
    }

    fn arb_cm() -> impl Strategy<Value = ConfusionMatrix> {
        prop::collection::vec((0usize..6, 0usize..6, 0u64..20), 0..30).prop_map(|v| {
            let mut cm = ConfusionMatrix::new();
            for (g, p, n) in v {
                cm.add_count(Label::from_index(g).unwrap(), Label::from_index(p).unwrap(), n);
            }
            cm
        })
    }

    proptest! {
        #[test]
        fn accounting_identities(cm in arb_cm()) {
            let tp: u64 = Label::ALL.iter().map(|&c| cm.tp(c)).sum();
            prop_assert_eq!(tp, cm.trace());
            let support: u64 = Label::ALL.iter().map(|&c| cm.support(c)).sum();
            prop_assert_eq!(support, cm.total());
            let r = MetricsReport::from_confusion(cm, &Label::ALL).unwrap();
            let (a, b) = (r.macro_p, r.macro_r);
            let expect = if a + b == 0.0 { 0.0 } else { 2.0 * a * b / (a + b) };
            prop_assert_eq!(r.macro_f1, expect);
            for m in &r.per_class {
                prop_assert!((0.0..=1.0).contains(&m.precision) && (0.0..=1.0).contains(&m.f1));
            }
        }
    }
}
