//! Evaluation of a trained artifact on a separate corpus, and the
//! chapter-order ablation.

use chapterfn_core::metrics::MetricsReport;
use chapterfn_core::{Article, Error, Label, Result};
use chapterfn_neural::{ModelSpec, ReorderMode};

use crate::config::RunConfig;
use crate::model::AnyModel;
use crate::registry::{RowModel, RowSpec};
use crate::runner::{confusion_of, require_labeled, run_rows, Protocol};

/// Scores `model` on `articles` without fitting anything. Refuses corpora
/// that share article ids with the model's training data.
pub fn open_test(model: &AnyModel, articles: &[Article], macro_classes: &[Label]) -> Result<MetricsReport> {
    require_labeled(articles)?;
    model.training_articles().ensure_disjoint(articles.iter().map(|a| a.id.as_str()))?;
    MetricsReport::from_confusion(confusion_of(model, articles)?, macro_classes)
}

/// Trains and evaluates `spec` on the hold-out split with the chapter order
/// `mode` applied to every context window, in training and evaluation.
pub fn order_ablation(spec: &ModelSpec, articles: &[Article], cfg: &RunConfig, mode: ReorderMode) -> Result<MetricsReport> {
    if spec.fusion.window == 0 {
        return Err(Error::Config("order ablation needs a context-fusion spec (window >= 1)".into()));
    }
    let spec = ModelSpec { order: mode, ..*spec };
    let row = RowSpec { name: mode.as_str().into(), model: RowModel::Neural(spec) };
    let report = run_rows("order-ablation", &[row], articles, cfg, Protocol::Holdout)?;
    Ok(report.rows.into_iter().next().expect("one row").pooled)
}

/// All three order modes over the same split.
pub fn order_ablation_all(spec: &ModelSpec, articles: &[Article], cfg: &RunConfig) -> Result<Vec<(ReorderMode, MetricsReport)>> {
    ReorderMode::ALL.into_iter().map(|m| Ok((m, order_ablation(spec, articles, cfg, m)?))).collect()
}
