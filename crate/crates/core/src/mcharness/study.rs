use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::estimator_set::EstimatorSpec;
use super::metrics::{summarize, ScenarioSummary};
use super::replicate::{filter_iv_outliers, replication_index, run_replication, ChainSettings, ReplicationRow};
use super::HarnessError;
use crate::dgp::{true_estimand, ScenarioSpec};
use crate::estimators::{EstimatorKind, NiRule};
use crate::numkernel::derive_stream;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_NSIM: usize = 2000;
/// IV(interaction) cells with SE above this multiple of the ITT SE are
/// filtered out of that estimator's summary.
pub const IV_FILTER_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub scenarios: Vec<ScenarioSpec>,
    pub estimators: Vec<EstimatorSpec>,
    pub nsim: usize,
    pub master_seed: u64,
    pub rule: NiRule,
    pub chain: ChainSettings,
    pub threads: usize,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::ConfigInvalid(m));
        if self.nsim < 2 {
            return bad(format!("nsim must be at least 2, got {}", self.nsim));
        }
        if self.nsim > u32::MAX as usize {
            return bad("nsim does not fit the replication index".into());
        }
        if self.scenarios.is_empty() {
            return bad("no scenarios selected".into());
        }
        if self.estimators.is_empty() {
            return bad("no estimators selected".into());
        }
        if self.threads == 0 {
            return bad("thread budget must be at least 1".into());
        }
        self.rule.validate().map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        for s in &self.scenarios {
            s.validate().map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            if self.scenarios[..i].iter().any(|t| t.label == s.label) {
                return bad(format!("scenario '{}' listed twice", s.label));
            }
        }
        let labels: Vec<String> = self.estimators.iter().map(|e| e.label()).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return bad(format!("estimator '{l}' listed twice"));
            }
        }
        for e in &self.estimators {
            if let EstimatorSpec::IvBayes { prior } = e {
                prior.validate().map_err(HarnessError::ConfigInvalid)?;
            }
        }
        let has = |k: EstimatorKind| self.estimators.iter().any(|e| e.kind() == k);
        if has(EstimatorKind::IvInteraction) && !has(EstimatorKind::Itt) {
            return bad("iv_interaction needs itt in the estimator set for the outlier filter".into());
        }
        if has(EstimatorKind::IvBayes) {
            crate::numkernel::ChainConfig { iterations: self.chain.iterations, burn_in: self.chain.burn_in, seed: 0 }
                .validate()
                .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub rows: Vec<ReplicationRow>,
    pub summaries: Vec<ScenarioSummary>,
}

/// Runs every (scenario, replication) pair on a pool of `threads` workers.
///
/// Replication `r` of scenario `s` always uses
/// `derive_stream(master_seed, replication_index(s, r))`, and rows are
/// collected in (scenario, rep) order, so the output does not depend on the
/// thread budget.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyOutput, HarnessError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let jobs: Vec<(usize, usize)> =
        (0..cfg.scenarios.len()).flat_map(|s| (0..cfg.nsim).map(move |r| (s, r))).collect();
    let rows: Vec<ReplicationRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, r)| {
                let spec = &cfg.scenarios[s];
                let stream = derive_stream(cfg.master_seed, replication_index(&spec.label, r));
                run_replication(spec, &cfg.estimators, &cfg.rule, cfg.chain, stream, r)
            })
            .collect::<Result<_, _>>()
    })?;
    let mut rows = rows;
    if cfg.estimators.iter().any(|e| e.kind() == EstimatorKind::IvInteraction) {
        filter_iv_outliers(&mut rows, IV_FILTER_FACTOR)?;
    }
    let summaries = cfg
        .scenarios
        .iter()
        .enumerate()
        .map(|(s, spec)| summarize(&rows[s * cfg.nsim..(s + 1) * cfg.nsim], &true_estimand(spec)))
        .collect::<Result<_, _>>()?;
    Ok(StudyOutput { rows, summaries })
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// One line per (scenario, replication, estimator).
pub fn write_results_csv<W: Write>(rows: &[ReplicationRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| HarnessError::Runtime(e.to_string());
    w.write_record([
        "scenario", "rep", "estimator", "point", "se", "lower", "upper", "ni", "dropped", "filtered", "failed",
        "seed", "dataset_sha256", "format_version",
    ])
    .map_err(io)?;
    let version = FORMAT_VERSION.to_string();
    for row in rows {
        let rep = row.rep.to_string();
        let seed = row.seed.index.to_string();
        for cell in &row.cells {
            let rec: Vec<String> = match &cell.outcome {
                Ok(e) => vec![
                    fmt_f64(e.point),
                    fmt_f64(e.se),
                    fmt_f64(e.lower),
                    fmt_f64(e.upper),
                    (e.ni as u8).to_string(),
                    e.diagnostics.dropped.to_string(),
                    (cell.filtered as u8).to_string(),
                    String::new(),
                ],
                Err(token) => {
                    vec![String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), "0".into(), token.clone()]
                }
            };
            let mut full = vec![row.scenario.clone(), rep.clone(), cell.estimator.clone()];
            full.extend(rec);
            full.extend([seed.clone(), row.checksum.clone(), version.clone()]);
            w.write_record(&full).map_err(io)?;
        }
    }
    w.flush().map_err(|e| HarnessError::Runtime(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryMetadata {
    pub master_seed: u64,
    pub nsim: usize,
    pub margin: f64,
    pub alpha: f64,
    pub level: f64,
    pub chain_iterations: usize,
    pub chain_burn_in: usize,
    pub iv_filter_factor: f64,
    /// How failed, filtered and IPW-dropped observations enter the metrics.
    pub accounting: Vec<&'static str>,
}

/// Summary document: `scenarios → label → estimators → label → metrics`.
pub fn summary_json(cfg: &StudyConfig, summaries: &[ScenarioSummary]) -> serde_json::Value {
    let meta = SummaryMetadata {
        master_seed: cfg.master_seed,
        nsim: cfg.nsim,
        margin: cfg.rule.margin,
        alpha: cfg.rule.alpha,
        level: cfg.rule.level(),
        chain_iterations: cfg.chain.iterations,
        chain_burn_in: cfg.chain.burn_in,
        iv_filter_factor: IV_FILTER_FACTOR,
        accounting: vec![
            "failed replications are excluded from that estimator's metrics and counted",
            "iv_interaction replications with se above the filter factor times the itt se are excluded and counted",
            "ipw observations in perfectly predicted weight-model cells are dropped before weighting; dropped_rate is their share of all observations",
            "nsim is a configuration choice; the default is 2000",
        ],
    };
    let mut scenarios = serde_json::Map::new();
    for s in summaries {
        let mut est = serde_json::Map::new();
        for (label, m) in &s.estimators {
            est.insert(label.clone(), serde_json::to_value(m).expect("metrics serialize"));
        }
        scenarios.insert(
            s.scenario.clone(),
            serde_json::json!({ "truth": s.truth, "p0": s.p0, "p1": s.p1, "estimators": est }),
        );
    }
    serde_json::json!({
        "format_version": FORMAT_VERSION,
        "metadata": meta,
        "scenarios": scenarios,
    })
}
