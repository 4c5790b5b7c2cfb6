//! Simulation data-generating processes and the frozen scenario catalog.
//!
//! Participants get a fair-coin allocation z, independent binary covariates
//! x (observed) and u (latent), an all-or-nothing compliance draw from a
//! logistic model, and a normal outcome whose mean depends on the treatment
//! actually received.

mod catalog;
mod sample;
mod spec;

pub use catalog::{
    catalog, catalog_sim1, catalog_sim2, full_catalog, sim1_ids, sim2_ids, solve_intercept, ARM_GAP,
    COMPLIANCE_SLOPE, DELTA0, INTERACTION_SHIFT, MARGIN_TRUTH, P_U, P_X, SIM1_MECHANISMS, SIM1_SERIES,
};
pub use sample::{brute_force_estimand, sample_dataset};
pub use spec::{true_estimand, Cell, ComplianceModel, GroundTruth, OutcomeModel, ScenarioSpec, Study};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DgpError {
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("invalid scenario '{label}': {reason}")]
    InvalidSpec { label: String, reason: String },
}

/// Catalog entry as exported by `dump-catalog`.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub spec: ScenarioSpec,
    pub digest: String,
    pub truth: GroundTruth,
}

pub fn catalog_entries() -> Vec<CatalogEntry> {
    full_catalog()
        .into_iter()
        .map(|spec| CatalogEntry { digest: spec.digest(), truth: true_estimand(&spec), spec })
        .collect()
}
