//! Dense fitting kernels shared by the estimators: least squares (plain,
//! weighted with a robust sandwich, two-stage), logistic IRLS with
//! perfect-prediction handling, a conjugate Gibbs sampler for the normal
//! linear model, and reproducible random-number streams.
//!
//! All kernels are pure functions of their inputs (and seed, where one is
//! taken) and are safe to call from many threads at once.

mod design;
mod gibbs;
mod linalg;
mod logit;
mod ols;
mod rng;

pub use design::DesignMatrix;
pub use gibbs::{
    gibbs_linear, gibbs_linear_draws, quantile_sorted, ChainConfig, NormalPrior, PosteriorDraws,
    PosteriorSummary, ScalarSummary, VariancePrior,
};
pub use linalg::CONDITION_LIMIT;
pub(crate) use logit::expit;
pub use logit::{logit_fit, LogitFit, SeparationCell, IRLS_MAX_ITER, IRLS_TOL};
pub use ols::{ols_fit, tsls_fit, wls_sandwich_fit, FitResult, RankStatus};
pub use rng::{derive_stream, SeedStream, StreamRng};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("rank-deficient design (columns: {columns:?}, condition number {condition:.3e})")]
    RankDeficient { columns: Vec<String>, condition: f64 },
    #[error("weight {value} at row {row} is not strictly positive")]
    NonPositiveWeight { row: usize, value: f64 },
    #[error("instruments are weak or collinear: stage-2 condition number {condition:.3e}")]
    WeakOrCollinearInstruments { condition: f64 },
    #[error("IRLS did not converge after {iterations} iterations (max |score| {max_score:.3e})")]
    NotConverged { iterations: usize, max_score: f64 },
    #[error("Gibbs chain produced a non-finite draw at iteration {iteration}")]
    ChainDiverged { iteration: usize },
    #[error("improper input: {0}")]
    ImproperInput(String),
    #[error("invalid design matrix: {0}")]
    InvalidDesign(String),
}
