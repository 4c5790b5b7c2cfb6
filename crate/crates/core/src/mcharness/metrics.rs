use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::replicate::ReplicationRow;
use super::HarnessError;
use crate::dgp::GroundTruth;
use crate::estimators::EstimatorKind;

/// Per-estimator performance over one scenario's replications.
///
/// Quantities that need at least two usable replications are `None`
/// otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorMetrics {
    pub nsim: usize,
    pub used: usize,
    pub failed: usize,
    pub filtered: usize,
    pub bias: Option<f64>,
    pub bias_mcse: Option<f64>,
    pub emp_se: Option<f64>,
    pub mean_model_se: Option<f64>,
    /// `100 × (mean model SE / empirical SE − 1)`.
    pub rel_se_error: Option<f64>,
    pub ni_rate: Option<f64>,
    pub ni_rate_mcse: Option<f64>,
    /// `100 × ((empSE / empSE_ITT)² − 1)`.
    pub precision_vs_itt: Option<f64>,
    /// Dropped observations over all observations, across usable replications.
    pub dropped_rate: f64,
    /// Error token → count.
    pub failures: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub truth: f64,
    pub p0: f64,
    pub p1: f64,
    /// Estimators in configuration order.
    pub estimators: Vec<(String, EstimatorMetrics)>,
}

impl ScenarioSummary {
    pub fn get(&self, label: &str) -> Option<&EstimatorMetrics> {
        self.estimators.iter().find(|(l, _)| l == label).map(|(_, m)| m)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Aggregates one scenario's rows. Filtered and failed cells are excluded
/// from every metric and counted separately.
pub fn summarize(rows: &[ReplicationRow], truth: &GroundTruth) -> Result<ScenarioSummary, HarnessError> {
    if rows.len() < 2 {
        return Err(HarnessError::InsufficientRows { rows: rows.len() });
    }
    let scenario = rows[0].scenario.clone();
    if let Some(r) = rows.iter().find(|r| r.scenario != scenario) {
        return Err(HarnessError::ConfigInvalid(format!(
            "summarize got rows from '{}' and '{}'",
            scenario, r.scenario
        )));
    }
    let labels: Vec<String> = rows[0].cells.iter().map(|c| c.estimator.clone()).collect();
    let mut out = Vec::with_capacity(labels.len());
    for label in &labels {
        let mut points = Vec::new();
        let mut ses = Vec::new();
        let mut ni = 0usize;
        let mut failed = 0;
        let mut filtered = 0;
        let mut dropped = 0usize;
        let mut total = 0usize;
        let mut failures = BTreeMap::new();
        for row in rows {
            let Some(cell) = row.cell(label) else {
                failed += 1;
                *failures.entry("missing".to_string()).or_insert(0) += 1;
                continue;
            };
            match &cell.outcome {
                Err(token) => {
                    failed += 1;
                    *failures.entry(token.clone()).or_insert(0) += 1;
                }
                Ok(_) if cell.filtered => filtered += 1,
                Ok(est) => {
                    points.push(est.point);
                    ses.push(est.se);
                    ni += est.ni as usize;
                    dropped += est.diagnostics.dropped;
                    total += row.n;
                }
            }
        }
        let used = points.len();
        let enough = used >= 2;
        let emp_se = enough.then(|| sample_sd(&points));
        let mean_model_se = enough.then(|| mean(&ses));
        let ni_rate = enough.then(|| ni as f64 / used as f64);
        out.push((
            label.clone(),
            EstimatorMetrics {
                nsim: rows.len(),
                used,
                failed,
                filtered,
                bias: enough.then(|| mean(&points) - truth.delta),
                bias_mcse: emp_se.map(|s| s / (used as f64).sqrt()),
                emp_se,
                mean_model_se,
                rel_se_error: match (mean_model_se, emp_se) {
                    (Some(m), Some(e)) if e > 0.0 => Some(100.0 * (m / e - 1.0)),
                    _ => None,
                },
                ni_rate,
                ni_rate_mcse: ni_rate.map(|p| (p * (1.0 - p) / used as f64).sqrt()),
                precision_vs_itt: None,
                dropped_rate: if total > 0 { dropped as f64 / total as f64 } else { 0.0 },
                failures,
            },
        ));
    }
    let itt_se = out
        .iter()
        .find(|(l, _)| l == EstimatorKind::Itt.id())
        .and_then(|(_, m)| m.emp_se)
        .filter(|s| *s > 0.0);
    if let Some(base) = itt_se {
        for (_, m) in out.iter_mut() {
            m.precision_vs_itt = m.emp_se.map(|s| 100.0 * ((s / base).powi(2) - 1.0));
        }
    }
    Ok(ScenarioSummary { scenario, truth: truth.delta, p0: truth.p0, p1: truth.p1, estimators: out })
}
