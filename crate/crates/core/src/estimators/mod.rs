//! Estimators of the hypothetical "everyone complies" effect
//! `E[Y | Z=1, C=1 forced] − E[Y | Z=0, C=1 forced]`.
//!
//! Outcomes are oriented so larger is better; non-inferiority is declared when
//! the lower interval limit exceeds the (negative) margin.

mod advise;
mod bayes;
mod dataset;
mod frequentist;

pub use advise::{advise_estimand, Recommendation, TrialSpecificEvents};
pub use bayes::{estimate_iv_bayes, estimate_iv_bayes_with, PriorSpec, VAGUE_SD};
pub use dataset::{Covariate, TrialDataset};
pub use frequentist::{
    estimate_ipw, estimate_ipw_with, estimate_itt, estimate_itt_with, estimate_iv_interaction,
    estimate_iv_interaction_with, estimate_pp, estimate_pp_with, AnalysisOptions, SeparationPolicy,
    POSITIVITY_FLOOR,
};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

use crate::numkernel::{NumError, RankStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("unknown covariate '{0}'")]
    UnknownCovariate(String),
    #[error("too few compliers in arm {arm}: {count}")]
    InsufficientCompliers { arm: u8, count: usize },
    #[error("complier at row {row} has fitted compliance probability {probability:.3e}")]
    PositivityViolation { row: usize, probability: f64 },
    #[error("instruments are weak or collinear (condition number {condition:.3e})")]
    WeakOrCollinearInstruments { condition: f64 },
    #[error("invalid non-inferiority rule: {0}")]
    InvalidRule(String),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error(transparent)]
    Numerical(NumError),
}

impl From<NumError> for EstimatorError {
    fn from(e: NumError) -> Self {
        match e {
            NumError::WeakOrCollinearInstruments { condition } => {
                EstimatorError::WeakOrCollinearInstruments { condition }
            }
            other => EstimatorError::Numerical(other),
        }
    }
}

impl EstimatorError {
    /// Short machine-readable token used in result tables.
    pub fn token(&self) -> &'static str {
        match self {
            EstimatorError::InvalidDataset(_) => "invalid_dataset",
            EstimatorError::UnknownCovariate(_) => "unknown_covariate",
            EstimatorError::InsufficientCompliers { .. } => "insufficient_compliers",
            EstimatorError::PositivityViolation { .. } => "positivity_violation",
            EstimatorError::WeakOrCollinearInstruments { .. } => "weak_or_collinear_instruments",
            EstimatorError::InvalidRule(_) => "invalid_rule",
            EstimatorError::InvalidPrior(_) => "invalid_prior",
            EstimatorError::Numerical(e) => match e {
                NumError::DimensionMismatch(_) => "dimension_mismatch",
                NumError::RankDeficient { .. } => "rank_deficient",
                NumError::NonPositiveWeight { .. } => "non_positive_weight",
                NumError::WeakOrCollinearInstruments { .. } => "weak_or_collinear_instruments",
                NumError::NotConverged { .. } => "not_converged",
                NumError::ChainDiverged { .. } => "chain_diverged",
                NumError::ImproperInput(_) => "improper_input",
                NumError::InvalidDesign(_) => "invalid_design",
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Itt,
    #[serde(rename = "pp")]
    PerProtocol,
    Ipw,
    IvInteraction,
    IvBayes,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Itt,
        EstimatorKind::PerProtocol,
        EstimatorKind::Ipw,
        EstimatorKind::IvInteraction,
        EstimatorKind::IvBayes,
    ];

    pub fn id(self) -> &'static str {
        match self {
            EstimatorKind::Itt => "itt",
            EstimatorKind::PerProtocol => "pp",
            EstimatorKind::Ipw => "ipw",
            EstimatorKind::IvInteraction => "iv_interaction",
            EstimatorKind::IvBayes => "iv_bayes",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }
}

/// Non-inferiority decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NiRule {
    pub margin: f64,
    /// One-sided level; intervals are reported at `1 − 2·alpha`.
    pub alpha: f64,
}

impl Default for NiRule {
    fn default() -> Self {
        Self { margin: -0.3, alpha: 0.025 }
    }
}

impl NiRule {
    pub fn new(margin: f64, alpha: f64) -> Result<Self, EstimatorError> {
        let rule = Self { margin, alpha };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if !self.margin.is_finite() {
            return Err(EstimatorError::InvalidRule(format!("margin {} is not finite", self.margin)));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(EstimatorError::InvalidRule(format!("alpha {} must lie in (0, 0.5)", self.alpha)));
        }
        Ok(())
    }

    pub fn level(&self) -> f64 {
        1.0 - 2.0 * self.alpha
    }
}

/// NI is declared iff the lower limit strictly exceeds the margin.
pub fn decide_ni(lower: f64, rule: &NiRule) -> bool {
    lower.is_finite() && lower > rule.margin
}

/// Sampling distribution behind a frequentist interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Reference {
    StudentT { df: f64 },
    Normal,
    Posterior,
}

impl Reference {
    fn upper_quantile(&self, alpha: f64) -> f64 {
        match *self {
            Reference::StudentT { df } => StudentsT::new(0.0, 1.0, df)
                .expect("positive degrees of freedom")
                .inverse_cdf(1.0 - alpha),
            Reference::Normal | Reference::Posterior => {
                Normal::standard().inverse_cdf(1.0 - alpha)
            }
        }
    }

    fn two_sided_p(&self, stat: f64) -> Option<f64> {
        let a = stat.abs();
        match *self {
            Reference::StudentT { df } => {
                Some(2.0 * StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom").sf(a))
            }
            Reference::Normal => Some(2.0 * Normal::standard().sf(a)),
            Reference::Posterior => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub kept: usize,
    pub mcse: f64,
    pub split_rhat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Rows entering the final (stage-2) fit.
    pub n_used: usize,
    /// Non-compliers left out by design (per-protocol and IPW).
    pub excluded: usize,
    /// Rows dropped because their weight-model cell predicted compliance perfectly.
    pub dropped: usize,
    pub separation_cells: usize,
    pub rank: RankStatus,
    /// Stage-2 condition number; for IV(interaction) this is the
    /// proportionality check on the predicted receipt columns.
    pub condition_number: Option<f64>,
    pub chain: Option<ChainDiagnostics>,
}

impl Diagnostics {
    fn fitted(n_used: usize, condition: f64) -> Self {
        Self {
            n_used,
            excluded: 0,
            dropped: 0,
            separation_cells: 0,
            rank: RankStatus::FullRank,
            condition_number: Some(condition),
            chain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimator: EstimatorKind,
    pub point: f64,
    /// Standard error, or posterior standard deviation for IV(Bayes).
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub ni: bool,
    pub reference: Reference,
    pub diagnostics: Diagnostics,
}

impl EstimateResult {
    fn symmetric(
        estimator: EstimatorKind,
        point: f64,
        se: f64,
        reference: Reference,
        rule: &NiRule,
        diagnostics: Diagnostics,
    ) -> Self {
        let half = reference.upper_quantile(rule.alpha) * se;
        let lower = point - half;
        Self {
            estimator,
            point,
            se,
            lower,
            upper: point + half,
            level: rule.level(),
            ni: decide_ni(lower, rule),
            reference,
            diagnostics,
        }
    }

    /// Two-sided Wald p-value for a zero difference; `None` for posterior
    /// summaries.
    pub fn p_value(&self) -> Option<f64> {
        if self.se > 0.0 {
            self.reference.two_sided_p(self.point / self.se)
        } else {
            self.reference.two_sided_p(0.0).map(|_| if self.point == 0.0 { 1.0 } else { 0.0 })
        }
    }
}
