use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::estimator_set::EstimatorSpec;
use super::HarnessError;
use crate::dgp::{sample_dataset, ScenarioSpec};
use crate::estimators::{
    estimate_ipw_with, estimate_itt, estimate_iv_bayes, estimate_iv_interaction, estimate_pp, AnalysisOptions,
    EstimateResult, EstimatorKind, NiRule, TrialDataset,
};
use crate::numkernel::{derive_stream, ChainConfig, SeedStream};

/// Salt separating the per-replication chain-seed stream from the data stream.
const CHAIN_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// MCMC length used for every IV(Bayes) cell of a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSettings {
    pub iterations: usize,
    pub burn_in: usize,
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self { iterations: ChainConfig::DEFAULT_ITERATIONS, burn_in: ChainConfig::DEFAULT_BURN_IN }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateCell {
    pub estimator: String,
    /// The estimate, or the error token.
    pub outcome: Result<EstimateResult, String>,
    /// Set by [`filter_iv_outliers`](super::filter_iv_outliers).
    pub filtered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRow {
    pub scenario: String,
    pub rep: usize,
    pub seed: SeedStream,
    pub n: usize,
    /// SHA-256 of the sampled dataset, shared by every cell of the row.
    pub checksum: String,
    pub cells: Vec<EstimateCell>,
}

impl ReplicationRow {
    pub fn cell(&self, label: &str) -> Option<&EstimateCell> {
        self.cells.iter().find(|c| c.estimator == label)
    }
}

/// Stream index for replication `rep` of a scenario: the first four bytes of
/// SHA-256(label) in the high half, `rep` in the low half.
pub fn replication_index(label: &str, rep: usize) -> u64 {
    let h = Sha256::digest(label.as_bytes());
    let hi = u32::from_be_bytes([h[0], h[1], h[2], h[3]]) as u64;
    (hi << 32) | (rep as u64 & 0xffff_ffff)
}

pub fn dataset_checksum(d: &TrialDataset) -> String {
    let mut h = Sha256::new();
    h.update((d.n() as u64).to_le_bytes());
    for v in d.y() {
        h.update(v.to_le_bytes());
    }
    h.update(d.z());
    h.update(d.c());
    for cov in d.covariates() {
        h.update(cov.name.as_bytes());
        for v in &cov.values {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn apply(
    est: &EstimatorSpec,
    spec: &ScenarioSpec,
    d: &TrialDataset,
    rule: &NiRule,
    chain: &ChainConfig,
) -> Result<EstimateResult, String> {
    let r = match est {
        EstimatorSpec::Itt => estimate_itt(d, rule),
        EstimatorSpec::Pp => estimate_pp(d, rule),
        EstimatorSpec::Ipw { separation } => {
            let opts = AnalysisOptions { separation: *separation, ..Default::default() };
            estimate_ipw_with(d, &opts, rule)
        }
        EstimatorSpec::IvInteraction => estimate_iv_interaction(d, rule),
        EstimatorSpec::IvBayes { prior } => estimate_iv_bayes(d, &prior.resolve_for(spec), chain, rule),
    };
    r.map_err(|e| e.token().to_string())
}

/// Samples one dataset and applies every estimator to it. Estimator errors
/// are stored as tokens in their cell.
pub fn run_replication(
    spec: &ScenarioSpec,
    estimators: &[EstimatorSpec],
    rule: &NiRule,
    chain: ChainSettings,
    stream: SeedStream,
    rep: usize,
) -> Result<ReplicationRow, HarnessError> {
    let sampled = sample_dataset(spec, stream);
    let chain_seed = derive_stream(stream.master ^ CHAIN_SALT, stream.index).rng().random::<u64>();
    let cfg = ChainConfig { iterations: chain.iterations, burn_in: chain.burn_in, seed: chain_seed };
    let (checksum, cells) = match sampled {
        Ok(full) => {
            let d = full.observed();
            let cells = estimators
                .iter()
                .map(|e| EstimateCell { estimator: e.label(), outcome: apply(e, spec, &d, rule, &cfg), filtered: false })
                .collect();
            (dataset_checksum(&d), cells)
        }
        Err(e) => {
            let token = e.token().to_string();
            let cells = estimators
                .iter()
                .map(|est| EstimateCell { estimator: est.label(), outcome: Err(token.clone()), filtered: false })
                .collect();
            (String::new(), cells)
        }
    };
    Ok(ReplicationRow { scenario: spec.label.clone(), rep, seed: stream, n: spec.n, checksum, cells })
}

/// Flags IV(interaction) cells whose SE exceeds `factor` times the same
/// replication's ITT SE. A cell at exactly the bound is kept.
pub fn filter_iv_outliers(rows: &mut [ReplicationRow], factor: f64) -> Result<usize, HarnessError> {
    let iv = EstimatorKind::IvInteraction.id();
    let itt = EstimatorKind::Itt.id();
    let mut flagged = 0;
    for row in rows.iter_mut() {
        let Some(iv_pos) = row.cells.iter().position(|c| c.estimator == iv) else { continue };
        let Some(itt_cell) = row.cell(itt) else {
            return Err(HarnessError::MissingReference { scenario: row.scenario.clone(), rep: row.rep });
        };
        let Ok(itt_est) = &itt_cell.outcome else { continue };
        let bound = factor * itt_est.se;
        let cell = &mut row.cells[iv_pos];
        if let Ok(iv_est) = &cell.outcome {
            cell.filtered = iv_est.se > bound;
            flagged += cell.filtered as usize;
        }
    }
    Ok(flagged)
}
