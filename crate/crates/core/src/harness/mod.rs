//! Experiment orchestration: stratified cross-validation, repeated-run
//! averaging, leave-one-out feature ranking, feature-count sweeps,
//! significance tables and report files.

mod algo;
mod cv;
mod report;
mod sweep;

pub use algo::{Algorithm, AlgorithmConfig, ModelFactory, Regressor, TrainedModel};
pub use cv::{
    cross_predict, run_cv, stratified_kfold, CvKind, CvOutcome, CvScheme, EvalSet, MetricPooling,
    MetricStat, MetricSummary,
};
pub use report::{
    emit_report, read_sweep_csv, summarize, write_comparison_csv, write_sweep_csv, AlgorithmSummary,
    BestEntry, MaybeBest, ReportBundle, Status, Summary, SUMMARY_CAVEAT,
};
pub use sweep::{
    compare_significance, feature_sweep, rank_features_loo, Baseline, ComparisonRow,
    ComparisonTable, SweepResult, SweepRow, DEFAULT_SIGNIFICANCE_N,
};
