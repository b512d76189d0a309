//! Downstream evaluation: classifiers, metrics, folds and the arm comparison.

pub mod classifiers;
mod compare;
mod folds;
mod metrics;
mod timing;

pub use classifiers::{fit, Classifier, ClassifierKind};
pub use compare::{
    comparison_folds, fit_arm_projection, run_comparison, Arm, Cell, CompareConfig, EvalReport, FoldMetrics, FoldOutcome, FoldProjection, Metric,
    ReportMeta, Summary,
};
pub use folds::{stratified_kfold, FoldPlan};
pub use metrics::{accuracy, auc, f1, Confusion};
pub use timing::{benchmark_timing, timing_csv, TimingRecord};
