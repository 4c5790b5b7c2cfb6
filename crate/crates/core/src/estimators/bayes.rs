use serde::{Deserialize, Serialize};

use super::frequentist::AnalysisOptions;
use super::{ChainDiagnostics, Diagnostics, EstimateResult, EstimatorError, EstimatorKind, NiRule, Reference, TrialDataset};
use crate::numkernel::{
    gibbs_linear_draws, ols_fit, quantile_sorted, ChainConfig, DesignMatrix, NormalPrior, ScalarSummary,
    VariancePrior,
};

pub const VAGUE_SD: f64 = 1000.0;

/// Prior on the standard-treatment-versus-nothing coefficient; every other
/// stage-2 coefficient gets `N(0, vague_sd²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub mean: f64,
    pub sd: f64,
    #[serde(default = "default_vague")]
    pub vague_sd: f64,
}

fn default_vague() -> f64 {
    VAGUE_SD
}

impl PriorSpec {
    pub fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd, vague_sd: VAGUE_SD }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if !self.mean.is_finite() {
            return Err(EstimatorError::InvalidPrior(format!("mean {} is not finite", self.mean)));
        }
        if !(self.sd > 0.0 && self.sd.is_finite()) {
            return Err(EstimatorError::InvalidPrior(format!("sd {} must be positive", self.sd)));
        }
        if !(self.vague_sd > 0.0 && self.vague_sd.is_finite()) {
            return Err(EstimatorError::InvalidPrior(format!("vague sd {} must be positive", self.vague_sd)));
        }
        Ok(())
    }
}

/// Two-stage Bayesian IV.
///
/// Stage 1 predicts each receipt indicator from allocation by OLS (which
/// reproduces the arm compliance proportions). Stage 2 samples the posterior
/// of y on (1, ĉ0, ĉ1, covariates) by Gibbs, treating the predictions as
/// fixed. The estimate is the posterior of `β_c1 − β_c0`.
pub fn estimate_iv_bayes(
    d: &TrialDataset,
    prior: &PriorSpec,
    cfg: &ChainConfig,
    rule: &NiRule,
) -> Result<EstimateResult, EstimatorError> {
    estimate_iv_bayes_with(d, &AnalysisOptions::default(), prior, cfg, rule)
}

pub fn estimate_iv_bayes_with(
    d: &TrialDataset,
    opts: &AnalysisOptions,
    prior: &PriorSpec,
    cfg: &ChainConfig,
    rule: &NiRule,
) -> Result<EstimateResult, EstimatorError> {
    rule.validate()?;
    prior.validate()?;
    let n = d.n();
    let stage1 = DesignMatrix::from_columns(vec![("_cons", vec![1.0; n]), ("z", d.z_f64())])?;
    let c0_hat = ols_fit(&stage1, &d.c0())?;
    let c1_hat = ols_fit(&stage1, &d.c1())?;
    let predict = |b: &[f64]| -> Vec<f64> { d.z().iter().map(|&z| b[0] + b[1] * z as f64).collect() };

    let adjust = opts.adjust_columns(d)?;
    let mut cols = vec![
        ("_cons".to_string(), vec![1.0; n]),
        ("c0_hat".to_string(), predict(&c0_hat.coefficients)),
        ("c1_hat".to_string(), predict(&c1_hat.coefficients)),
    ];
    cols.extend(adjust.iter().map(|(name, v)| (name.clone(), v.to_vec())));
    let design = DesignMatrix::from_columns(cols)?;
    let k = design.cols();
    let vague = NormalPrior::new(0.0, prior.vague_sd);
    let mut priors = vec![vague; k];
    priors[1] = NormalPrior::new(prior.mean, prior.sd);

    let draws = gibbs_linear_draws(d.y(), &design, &priors, VariancePrior::default(), cfg)?;
    let mut weights = vec![0.0; k];
    weights[1] = -1.0;
    weights[2] = 1.0;
    let contrast = draws.contrast(&weights);
    let summary = ScalarSummary::from_draws(&contrast);
    let mut sorted = contrast;
    sorted.sort_by(|a, b| a.total_cmp(b));
    let lower = quantile_sorted(&sorted, rule.alpha);
    let upper = quantile_sorted(&sorted, 1.0 - rule.alpha);

    let mut diag = Diagnostics::fitted(n, f64::NAN);
    diag.condition_number = None;
    diag.chain = Some(ChainDiagnostics { kept: sorted.len(), mcse: summary.mcse, split_rhat: summary.split_rhat });
    Ok(EstimateResult {
        estimator: EstimatorKind::IvBayes,
        point: summary.mean,
        se: summary.sd,
        lower,
        upper,
        level: rule.level(),
        ni: super::decide_ni(lower, rule),
        reference: Reference::Posterior,
        diagnostics: diag,
    })
}
