//! Experiment grids, evaluation protocols and reports.

pub mod config;
pub mod model;
pub mod opentest;
pub mod registry;
pub mod runner;

pub use config::RunConfig;
pub use model::AnyModel;
pub use opentest::{open_test, order_ablation, order_ablation_all};
pub use registry::{grid, ExperimentId, RowModel, RowSpec};
pub use runner::{run_crf, run_experiment, run_rows, train_row, ExperimentReport, Protocol};
