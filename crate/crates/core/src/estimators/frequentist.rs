use serde::{Deserialize, Serialize};

use super::{Diagnostics, EstimateResult, EstimatorError, EstimatorKind, NiRule, Reference, TrialDataset};
use crate::numkernel::{logit_fit, ols_fit, tsls_fit, wls_sandwich_fit, DesignMatrix, NumError};

/// Compliers whose fitted compliance probability falls below this are
/// treated as a positivity failure.
pub const POSITIVITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationPolicy {
    /// Rows in perfectly predicted cells are removed and counted.
    #[default]
    Drop,
    /// Perfectly predicted compliers stay in with weight 1.
    KeepWeightOne,
}

/// Which covariates each estimator uses. `None` means every covariate in the
/// dataset (or the first one, for the instrument).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    pub adjust: Option<Vec<String>>,
    pub weight_model: Option<Vec<String>>,
    pub instrument: Option<String>,
    #[serde(default)]
    pub separation: SeparationPolicy,
}

impl AnalysisOptions {
    pub(crate) fn adjust_columns<'a>(&self, d: &'a TrialDataset) -> Result<Vec<(String, &'a [f64])>, EstimatorError> {
        resolve(d, self.adjust.as_deref())
    }

    fn weight_columns<'a>(&self, d: &'a TrialDataset) -> Result<Vec<(String, &'a [f64])>, EstimatorError> {
        resolve(d, self.weight_model.as_deref())
    }

    fn instrument_column<'a>(&self, d: &'a TrialDataset) -> Result<(String, &'a [f64]), EstimatorError> {
        let name = match &self.instrument {
            Some(n) => n.clone(),
            None => d
                .covariates()
                .first()
                .map(|c| c.name.clone())
                .ok_or_else(|| EstimatorError::UnknownCovariate("<instrument>".into()))?,
        };
        let col = d.covariate(&name).ok_or_else(|| EstimatorError::UnknownCovariate(name.clone()))?;
        Ok((name, col))
    }
}

fn resolve<'a>(d: &'a TrialDataset, names: Option<&[String]>) -> Result<Vec<(String, &'a [f64])>, EstimatorError> {
    match names {
        None => Ok(d.covariates().iter().map(|c| (c.name.clone(), c.values.as_slice())).collect()),
        Some(names) => names
            .iter()
            .map(|n| {
                d.covariate(n)
                    .map(|col| (n.clone(), col))
                    .ok_or_else(|| EstimatorError::UnknownCovariate(n.clone()))
            })
            .collect(),
    }
}

fn arm_design(d: &TrialDataset, adjust: &[(String, &[f64])]) -> Result<DesignMatrix, NumError> {
    let mut cols = vec![("_cons".to_string(), vec![1.0; d.n()]), ("z".to_string(), d.z_f64())];
    cols.extend(adjust.iter().map(|(n, v)| (n.clone(), v.to_vec())));
    DesignMatrix::from_columns(cols)
}

fn regression_estimate(
    kind: EstimatorKind,
    d: &TrialDataset,
    opts: &AnalysisOptions,
    rule: &NiRule,
    excluded: usize,
) -> Result<EstimateResult, EstimatorError> {
    let adjust = opts.adjust_columns(d)?;
    let design = arm_design(d, &adjust)?;
    let fit = ols_fit(&design, d.y())?;
    let df = (fit.n_used - fit.coefficients.len()) as f64;
    if df < 1.0 {
        return Err(NumError::RankDeficient { columns: fit.labels, condition: fit.condition_number }.into());
    }
    let mut diag = Diagnostics::fitted(fit.n_used, fit.condition_number);
    diag.excluded = excluded;
    Ok(EstimateResult::symmetric(kind, fit.coefficients[1], fit.std_error(1), Reference::StudentT { df }, rule, diag))
}

/// Intention-to-treat: OLS of y on (1, z, covariates) over everyone.
pub fn estimate_itt(d: &TrialDataset, rule: &NiRule) -> Result<EstimateResult, EstimatorError> {
    estimate_itt_with(d, &AnalysisOptions::default(), rule)
}

pub fn estimate_itt_with(
    d: &TrialDataset,
    opts: &AnalysisOptions,
    rule: &NiRule,
) -> Result<EstimateResult, EstimatorError> {
    rule.validate()?;
    regression_estimate(EstimatorKind::Itt, d, opts, rule, 0)
}

/// Per-protocol: the ITT regression restricted to compliers.
pub fn estimate_pp(d: &TrialDataset, rule: &NiRule) -> Result<EstimateResult, EstimatorError> {
    estimate_pp_with(d, &AnalysisOptions::default(), rule)
}

pub fn estimate_pp_with(
    d: &TrialDataset,
    opts: &AnalysisOptions,
    rule: &NiRule,
) -> Result<EstimateResult, EstimatorError> {
    rule.validate()?;
    for arm in [0, 1] {
        let count = d.compliers_in_arm(arm);
        if count < 2 {
            return Err(EstimatorError::InsufficientCompliers { arm, count });
        }
    }
    let rows: Vec<usize> = (0..d.n()).filter(|&i| d.c()[i] == 1).collect();
    let sub = d.subset(&rows);
    regression_estimate(EstimatorKind::PerProtocol, &sub, opts, rule, d.n() - rows.len())
}

/// Inverse probability of compliance weighting.
///
/// Compliance is modelled by a logit on (1, weight covariates) separately in
/// each arm; compliers are then reweighted by `1/p̂` and y is regressed on
/// (1, z) with an HC1 sandwich covariance.
pub fn estimate_ipw(d: &TrialDataset, rule: &NiRule) -> Result<EstimateResult, EstimatorError> {
    estimate_ipw_with(d, &AnalysisOptions::default(), rule)
}

pub fn estimate_ipw_with(
    d: &TrialDataset,
    opts: &AnalysisOptions,
    rule: &NiRule,
) -> Result<EstimateResult, EstimatorError> {
    rule.validate()?;
    let wcols = opts.weight_columns(d)?;
    let n = d.n();
    let mut prob = vec![1.0; n];
    let mut dropped_row = vec![false; n];
    let mut separation_cells = 0;

    for arm in [0u8, 1] {
        let rows: Vec<usize> = (0..n).filter(|&i| d.z()[i] == arm).collect();
        let compliers = rows.iter().filter(|&&i| d.c()[i] == 1).count();
        if compliers == 0 {
            return Err(EstimatorError::InsufficientCompliers { arm, count: 0 });
        }
        if compliers == rows.len() {
            // Nobody to reweight against: every complier keeps weight 1.
            continue;
        }
        let mut cols = vec![("_cons".to_string(), vec![1.0; rows.len()])];
        cols.extend(wcols.iter().map(|(name, v)| (name.clone(), rows.iter().map(|&i| v[i]).collect())));
        let design = DesignMatrix::from_columns(cols)?;
        let c: Vec<u8> = rows.iter().map(|&i| d.c()[i]).collect();
        let fit = logit_fit(&design, &c)?;
        if !fit.converged {
            return Err(NumError::NotConverged { iterations: fit.iterations, max_score: fit.max_score }.into());
        }
        separation_cells += fit.separation_cells.len();
        for (r, &i) in rows.iter().enumerate() {
            prob[i] = fit.fitted[r];
        }
        if opts.separation == SeparationPolicy::Drop {
            for &r in &fit.dropped {
                dropped_row[rows[r]] = true;
            }
        }
    }

    let keep: Vec<usize> = (0..n).filter(|&i| d.c()[i] == 1 && !dropped_row[i]).collect();
    for arm in [0u8, 1] {
        let count = keep.iter().filter(|&&i| d.z()[i] == arm).count();
        if count < 2 {
            return Err(EstimatorError::InsufficientCompliers { arm, count });
        }
    }
    if let Some(&row) = keep.iter().find(|&&i| prob[i] < POSITIVITY_FLOOR) {
        return Err(EstimatorError::PositivityViolation { row, probability: prob[row] });
    }
    let y: Vec<f64> = keep.iter().map(|&i| d.y()[i]).collect();
    let w: Vec<f64> = keep.iter().map(|&i| 1.0 / prob[i]).collect();
    let design = DesignMatrix::from_columns(vec![
        ("_cons", vec![1.0; keep.len()]),
        ("z", keep.iter().map(|&i| d.z()[i] as f64).collect()),
    ])?;
    let fit = wls_sandwich_fit(&design, &y, &w)?;
    let dropped = dropped_row.iter().filter(|&&b| b).count();
    let mut diag = Diagnostics::fitted(fit.n_used, fit.condition_number);
    diag.dropped = dropped;
    diag.separation_cells = separation_cells;
    diag.excluded = n - keep.len() - dropped;
    Ok(EstimateResult::symmetric(EstimatorKind::Ipw, fit.coefficients[1], fit.std_error(1), Reference::Normal, rule, diag))
}

/// 2SLS with separate receipt indicators per arm and the arm × covariate
/// interaction as the extra instrument.
pub fn estimate_iv_interaction(d: &TrialDataset, rule: &NiRule) -> Result<EstimateResult, EstimatorError> {
    estimate_iv_interaction_with(d, &AnalysisOptions::default(), rule)
}

pub fn estimate_iv_interaction_with(
    d: &TrialDataset,
    opts: &AnalysisOptions,
    rule: &NiRule,
) -> Result<EstimateResult, EstimatorError> {
    rule.validate()?;
    let n = d.n();
    let (iname, inst) = opts.instrument_column(d)?;
    let mut adjust = opts.adjust_columns(d)?;
    if !adjust.iter().any(|(name, _)| *name == iname) {
        adjust.insert(0, (iname.clone(), inst));
    }
    let endog = DesignMatrix::from_columns(vec![("c0", d.c0()), ("c1", d.c1())])?;
    let mut exog_cols = vec![("_cons".to_string(), vec![1.0; n])];
    exog_cols.extend(adjust.iter().map(|(name, v)| (name.clone(), v.to_vec())));
    let exog = DesignMatrix::from_columns(exog_cols)?;
    let z = d.z_f64();
    let zx: Vec<f64> = z.iter().zip(inst).map(|(a, b)| a * b).collect();
    let instruments = DesignMatrix::from_columns(vec![("z".to_string(), z), (format!("z#{iname}"), zx)])?;
    let fit = tsls_fit(d.y(), &endog, &exog, &instruments)?;
    let (point, se) = fit.contrast(1, 0);
    let diag = Diagnostics::fitted(fit.n_used, fit.condition_number);
    Ok(EstimateResult::symmetric(EstimatorKind::IvInteraction, point, se, Reference::Normal, rule, diag))
}
