//! Replication engine: samples datasets from catalog scenarios, applies a
//! set of estimators to each, filters IV(interaction) outliers and reduces
//! the results to per-scenario performance metrics.

mod estimator_set;
mod metrics;
mod replicate;
mod study;

pub use estimator_set::{default_estimators, standard_priors, BayesPrior, EstimatorSpec};
pub use metrics::{summarize, EstimatorMetrics, ScenarioSummary};
pub use replicate::{
    dataset_checksum, filter_iv_outliers, replication_index, run_replication, ChainSettings, EstimateCell,
    ReplicationRow,
};
pub use study::{
    run_study, summary_json, write_results_csv, StudyConfig, StudyOutput, SummaryMetadata, DEFAULT_NSIM,
    FORMAT_VERSION, IV_FILTER_FACTOR,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid study configuration: {0}")]
    ConfigInvalid(String),
    #[error("replication {rep} of '{scenario}' has no itt cell to filter against")]
    MissingReference { scenario: String, rep: usize },
    #[error("need at least 2 rows to summarize, got {rows}")]
    InsufficientRows { rows: usize },
    #[error("{0}")]
    Runtime(String),
}
