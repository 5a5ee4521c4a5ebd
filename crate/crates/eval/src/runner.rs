//! Cross-validation and hold-out runners producing per-fold and pooled
//! metrics reports.

use std::fmt::Write as _;

use chapterfn_core::classic::ClassicModel;
use chapterfn_core::corpus::unlabeled_article_ids;
use chapterfn_core::crf::CrfTagger;
use chapterfn_core::metrics::{mean_std, ConfusionMatrix, MetricsReport, CSV_HEADER};
use chapterfn_core::pipeline::{ClassicPipeline, Role, TrainedModel};
use chapterfn_core::split::{make_split, Split, SplitKind, SplitPlan};
use chapterfn_core::{Article, Error, Label, Result};
use chapterfn_neural::NeuralModel;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::model::AnyModel;
use crate::registry::{grid, ExperimentId, RowModel, RowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    CrossValidation,
    Holdout,
}

impl Protocol {
    pub fn for_experiment(id: ExperimentId) -> Protocol {
        if id.is_neural() {
            Protocol::Holdout
        } else {
            Protocol::CrossValidation
        }
    }

    pub fn parse(s: &str) -> Result<Protocol> {
        match s {
            "cv" => Ok(Protocol::CrossValidation),
            "holdout" => Ok(Protocol::Holdout),
            other => Err(Error::Config(format!("unknown protocol `{other}` (cv, holdout)"))),
        }
    }

    fn describe(self, cfg: &RunConfig) -> String {
        match self {
            Protocol::CrossValidation => format!("{}-fold", cfg.folds),
            Protocol::Holdout => "holdout-8:1:1".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: String,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowResult {
    pub name: String,
    pub folds: Vec<FoldResult>,
    /// Metrics of the summed confusion matrix over all folds.
    pub pooled: MetricsReport,
}

impl RowResult {
    fn from_folds(name: String, folds: Vec<FoldResult>, classes: &[Label]) -> Result<Self> {
        let mut cm = ConfusionMatrix::new();
        for f in &folds {
            cm.merge(&f.report.confusion);
        }
        Ok(RowResult { name, folds, pooled: MetricsReport::from_confusion(cm, classes)? })
    }

    /// (mean, std) of the per-fold macro-F1.
    pub fn fold_macro_f1(&self) -> (f64, f64) {
        mean_std(&self.folds.iter().map(|f| f.report.macro_f1).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub protocol: String,
    pub seed: u64,
    pub config_digest: String,
    pub rows: Vec<RowResult>,
}

impl ExperimentReport {
    pub fn row(&self, name: &str) -> Option<&RowResult> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Per-fold and pooled (`all`) class rows; cross-validated rows also get
    /// `mean` and `std` macro rows over folds.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# experiment: {}", self.experiment);
        let _ = writeln!(s, "# protocol: {}", self.protocol);
        let _ = writeln!(s, "# seed: {}", self.seed);
        let _ = writeln!(s, "# config_digest: {}", self.config_digest);
        s.push_str(CSV_HEADER);
        s.push('\n');
        for row in &self.rows {
            let exp = format!("{}/{}", self.experiment, row.name);
            for f in &row.folds {
                s.push_str(&f.report.csv_rows(&exp, &f.fold));
            }
            if row.folds.len() > 1 {
                s.push_str(&row.pooled.csv_rows(&exp, "all"));
                let col = |g: fn(&MetricsReport) -> f64| mean_std(&row.folds.iter().map(|f| g(&f.report)).collect::<Vec<_>>());
                let (p, r, f) = (col(|m| m.macro_p), col(|m| m.macro_r), col(|m| m.macro_f1));
                let _ = writeln!(s, "{exp},mean,macro,{:.6},{:.6},{:.6}", p.0, r.0, f.0);
                let _ = writeln!(s, "{exp},std,macro,{:.6},{:.6},{:.6}", p.1, r.1, f.1);
            }
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} ({}, seed {})\n", self.experiment, self.protocol, self.seed);
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(4);
        let _ = writeln!(s, "{:<width$}  macro_P  macro_R  macro_F1  fold_F1_std", "row");
        for r in &self.rows {
            let (_, sd) = r.fold_macro_f1();
            let p = &r.pooled;
            let _ = writeln!(s, "{:<width$}  {:.4}   {:.4}   {:.4}    {:.4}", r.name, p.macro_p, p.macro_r, p.macro_f1, sd);
        }
        s
    }
}

/// Errors unless every chapter carries a gold label.
pub fn require_labeled(articles: &[Article]) -> Result<()> {
    let missing = unlabeled_article_ids(articles);
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Unlabeled(missing))
    }
}

fn pick(articles: &[Article], idx: &[usize]) -> Vec<Article> {
    idx.iter().map(|&i| articles[i].clone()).collect()
}

/// Trains the model of `row`. Neural rows need a nonempty `valid` set for
/// early stopping; classical rows ignore it.
pub fn train_row(row: &RowModel, train: &[Article], valid: &[Article], cfg: &RunConfig) -> Result<AnyModel> {
    match row {
        RowModel::Classic { family, field, characteristics } => {
            let (pipeline, warnings) = ClassicPipeline::fit(train, *field, *characteristics, &cfg.features)?;
            for w in warnings {
                log::warn!("{w}");
            }
            let model = ClassicModel::train(*family, &pipeline.examples(train, Role::Train)?, &cfg.classic)?;
            Ok(AnyModel::Classic(TrainedModel::Classic { pipeline, model }))
        }
        RowModel::Neural(spec) => Ok(AnyModel::Neural(NeuralModel::fit(train, valid, *spec, cfg.neural.clone())?)),
    }
}

/// Confusion matrix of `model` over the labeled chapters of `articles`.
pub fn confusion_of(model: &AnyModel, articles: &[Article]) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new();
    for a in articles {
        for (pred, c) in model.predict_article(a)?.into_iter().zip(&a.chapters) {
            if let Some(gold) = c.label {
                cm.add(gold, pred);
            }
        }
    }
    Ok(cm)
}

/// Splits for `protocol`: (fold name, train, valid, test) index sets. Under
/// cross-validation the validation set is empty.
pub fn protocol_splits(n: usize, protocol: Protocol, cfg: &RunConfig) -> Result<Vec<(String, Vec<usize>, Vec<usize>, Vec<usize>)>> {
    let kind = match protocol {
        Protocol::CrossValidation => SplitKind::KFold(cfg.folds),
        Protocol::Holdout => SplitKind::Holdout,
    };
    Ok(match make_split(n, &SplitPlan { kind, seed: cfg.seed })? {
        s @ Split::KFold(_) => s
            .train_test()
            .into_iter()
            .enumerate()
            .map(|(k, (tr, te))| ((k + 1).to_string(), tr, Vec::new(), te))
            .collect(),
        Split::Holdout { train, valid, test } => vec![("test".into(), train, valid, test)],
    })
}

/// Runs `rows` under `protocol`. Folds and rows are evaluated in parallel;
/// results are assembled in row, then fold order.
pub fn run_rows(experiment: &str, rows: &[RowSpec], articles: &[Article], cfg: &RunConfig, protocol: Protocol) -> Result<ExperimentReport> {
    cfg.validate()?;
    require_labeled(articles)?;
    if protocol == Protocol::CrossValidation && rows.iter().any(|r| matches!(r.model, RowModel::Neural(_))) {
        return Err(Error::Config("neural rows need a validation split; use the hold-out protocol".into()));
    }
    let splits = protocol_splits(articles.len(), protocol, cfg)?;
    let jobs: Vec<(usize, usize)> = (0..rows.len()).flat_map(|r| (0..splits.len()).map(move |f| (r, f))).collect();
    let results: Vec<Result<FoldResult>> = jobs
        .par_iter()
        .map(|&(r, f)| {
            let (fold, tr, va, te) = &splits[f];
            log::info!("{experiment}: row `{}` fold {fold}", rows[r].name);
            let model = train_row(&rows[r].model, &pick(articles, tr), &pick(articles, va), cfg)?;
            let cm = confusion_of(&model, &pick(articles, te))?;
            Ok(FoldResult { fold: fold.clone(), report: MetricsReport::from_confusion(cm, &cfg.macro_classes)? })
        })
        .collect();
    let mut results = results.into_iter();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let folds = results.by_ref().take(splits.len()).collect::<Result<Vec<_>>>()?;
        out.push(RowResult::from_folds(row.name.clone(), folds, &cfg.macro_classes)?);
    }
    Ok(ExperimentReport {
        experiment: experiment.into(),
        protocol: protocol.describe(cfg),
        seed: cfg.seed,
        config_digest: cfg.digest(),
        rows: out,
    })
}

/// Runs a registered grid under its own protocol.
pub fn run_experiment(id: ExperimentId, articles: &[Article], cfg: &RunConfig) -> Result<ExperimentReport> {
    run_rows(id.name(), &grid(id), articles, cfg, Protocol::for_experiment(id))
}

/// Linear-chain CRF over chapter sequences under `protocol`.
pub fn run_crf(articles: &[Article], cfg: &RunConfig, protocol: Protocol) -> Result<ExperimentReport> {
    cfg.validate()?;
    require_labeled(articles)?;
    let splits = protocol_splits(articles.len(), protocol, cfg)?;
    let folds = splits
        .par_iter()
        .map(|(fold, tr, _, te)| {
            let tagger = CrfTagger::train(&pick(articles, tr), &cfg.crf)?;
            let model = AnyModel::Classic(TrainedModel::Crf { config: cfg.features.clone(), tagger });
            let cm = confusion_of(&model, &pick(articles, te))?;
            Ok(FoldResult { fold: fold.clone(), report: MetricsReport::from_confusion(cm, &cfg.macro_classes)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        experiment: "CRF".into(),
        protocol: protocol.describe(cfg),
        seed: cfg.seed,
        config_digest: cfg.digest(),
        rows: vec![RowResult::from_folds("CRF".into(), folds, &cfg.macro_classes)?],
    })
}
