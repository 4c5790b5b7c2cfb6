use nalgebra::{DMatrix, DVector};

use super::design::DesignMatrix;
use super::linalg::{condition_number, spd_inverse, CONDITION_LIMIT};
use super::NumError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankStatus {
    FullRank,
    Deficient,
}

/// Coefficients and covariance from a least-squares type fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub residual_variance: f64,
    pub n_used: usize,
    pub rank: RankStatus,
    /// Condition number of the (equilibrated) Gram matrix the fit inverted.
    pub condition_number: f64,
}

impl FitResult {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.index_of(label).map(|j| self.coefficients[j])
    }

    pub fn std_error(&self, j: usize) -> f64 {
        self.covariance[(j, j)].max(0.0).sqrt()
    }

    /// Estimate and standard error of `b[plus] - b[minus]`.
    pub fn contrast(&self, plus: usize, minus: usize) -> (f64, f64) {
        let v = &self.covariance;
        let var = v[(plus, plus)] + v[(minus, minus)] - 2.0 * v[(plus, minus)];
        (self.coefficients[plus] - self.coefficients[minus], var.max(0.0).sqrt())
    }
}

fn check_len(design: &DesignMatrix, y: &[f64], what: &str) -> Result<(), NumError> {
    if design.rows() != y.len() {
        return Err(NumError::DimensionMismatch(format!(
            "design has {} rows but {what} has length {}",
            design.rows(),
            y.len()
        )));
    }
    Ok(())
}

fn rank_deficient(design: &DesignMatrix, condition: f64) -> NumError {
    NumError::RankDeficient { columns: design.labels().to_vec(), condition }
}

/// Ordinary least squares with the classical `σ̂² (X'X)⁻¹` covariance,
/// `σ̂² = RSS / (n − k)`.
pub fn ols_fit(design: &DesignMatrix, y: &[f64]) -> Result<FitResult, NumError> {
    check_len(design, y, "y")?;
    let x = design.matrix();
    let (n, k) = x.shape();
    let gram = x.transpose() * x;
    let condition = condition_number(&gram);
    if condition > CONDITION_LIMIT {
        return Err(rank_deficient(design, condition));
    }
    let chol = gram.clone().cholesky().ok_or_else(|| rank_deficient(design, condition))?;
    let yv = DVector::from_column_slice(y);
    let beta = chol.solve(&(x.transpose() * &yv));
    let resid = &yv - x * &beta;
    let rss = resid.norm_squared();
    let sigma2 = if n > k { rss / (n - k) as f64 } else { 0.0 };
    let inv = spd_inverse(&gram).ok_or_else(|| rank_deficient(design, condition))?;
    Ok(FitResult {
        labels: design.labels().to_vec(),
        coefficients: beta.iter().copied().collect(),
        covariance: inv * sigma2,
        residual_variance: sigma2,
        n_used: n,
        rank: RankStatus::FullRank,
        condition_number: condition,
    })
}

/// Weighted least squares with the HC1 sandwich covariance
/// `(X'WX)⁻¹ (Σ wᵢ² eᵢ² xᵢxᵢ') (X'WX)⁻¹ · n/(n − k)`.
///
/// `residual_variance` is reported as `Σ wᵢ eᵢ² / (n − k)`.
pub fn wls_sandwich_fit(design: &DesignMatrix, y: &[f64], w: &[f64]) -> Result<FitResult, NumError> {
    check_len(design, y, "y")?;
    check_len(design, w, "w")?;
    if let Some((row, &value)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
        return Err(NumError::NonPositiveWeight { row, value });
    }
    let x = design.matrix();
    let (n, k) = x.shape();
    let mut xw = x.clone();
    for (i, &wi) in w.iter().enumerate() {
        xw.row_mut(i).scale_mut(wi);
    }
    let xtwx = x.transpose() * &xw;
    let condition = condition_number(&xtwx);
    if condition > CONDITION_LIMIT {
        return Err(rank_deficient(design, condition));
    }
    let chol = xtwx.clone().cholesky().ok_or_else(|| rank_deficient(design, condition))?;
    let yv = DVector::from_column_slice(y);
    let beta = chol.solve(&(xw.transpose() * &yv));
    let resid = &yv - x * &beta;

    let mut meat = DMatrix::<f64>::zeros(k, k);
    let mut wrss = 0.0;
    for i in 0..n {
        let s = w[i] * resid[i];
        wrss += w[i] * resid[i] * resid[i];
        let s2 = s * s;
        for a in 0..k {
            let xa = x[(i, a)] * s2;
            for b in 0..k {
                meat[(a, b)] += xa * x[(i, b)];
            }
        }
    }
    let bread = spd_inverse(&xtwx).ok_or_else(|| rank_deficient(design, condition))?;
    let correction = if n > k { n as f64 / (n - k) as f64 } else { 1.0 };
    let cov = &bread * meat * &bread * correction;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(FitResult {
        labels: design.labels().to_vec(),
        coefficients: beta.iter().copied().collect(),
        covariance: cov,
        residual_variance: if n > k { wrss / (n - k) as f64 } else { 0.0 },
        n_used: n,
        rank: RankStatus::FullRank,
        condition_number: condition,
    })
}

/// Two-stage least squares.
///
/// Stage 1 projects every endogenous column on `[instruments | exog]`;
/// stage 2 regresses `y` on `[projected endog | exog]`. The covariance is
/// `σ̂² (X̂'X̂)⁻¹` with `σ̂² = (1/n) Σ (yᵢ − xᵢ'β̂)²`, where the residuals use
/// the actual (not projected) endogenous values. Coefficients are ordered
/// endogenous first, then exogenous.
pub fn tsls_fit(
    y: &[f64],
    endog: &DesignMatrix,
    exog: &DesignMatrix,
    instruments: &DesignMatrix,
) -> Result<FitResult, NumError> {
    check_len(endog, y, "y")?;
    check_len(exog, y, "y")?;
    check_len(instruments, y, "y")?;
    if instruments.cols() < endog.cols() {
        return Err(NumError::DimensionMismatch(format!(
            "under-identified: {} instruments for {} endogenous regressors",
            instruments.cols(),
            endog.cols()
        )));
    }
    let n = y.len();
    let zfull = instruments.hstack(exog)?;
    let zm = zfull.matrix();
    let zgram = zm.transpose() * zm;
    let zcond = condition_number(&zgram);
    if zcond > CONDITION_LIMIT {
        return Err(NumError::WeakOrCollinearInstruments { condition: zcond });
    }
    let zchol = zgram.cholesky().ok_or(NumError::WeakOrCollinearInstruments { condition: zcond })?;

    let mut stage2_cols: Vec<(String, Vec<f64>)> = Vec::with_capacity(endog.cols() + exog.cols());
    for j in 0..endog.cols() {
        let c = DVector::from_column_slice(endog.column(j));
        let gamma = zchol.solve(&(zm.transpose() * &c));
        let fitted = zm * gamma;
        stage2_cols.push((endog.labels()[j].clone(), fitted.iter().copied().collect()));
    }
    for j in 0..exog.cols() {
        stage2_cols.push((exog.labels()[j].clone(), exog.column(j).to_vec()));
    }
    let xhat = DesignMatrix::from_columns(stage2_cols)?;
    let xh = xhat.matrix();
    let gram = xh.transpose() * xh;
    let condition = condition_number(&gram);
    if condition > CONDITION_LIMIT {
        return Err(NumError::WeakOrCollinearInstruments { condition });
    }
    let chol = gram.clone().cholesky().ok_or(NumError::WeakOrCollinearInstruments { condition })?;
    let yv = DVector::from_column_slice(y);
    let beta = chol.solve(&(xh.transpose() * &yv));

    let actual = endog.hstack(exog)?;
    let resid = &yv - actual.matrix() * &beta;
    let sigma2 = resid.norm_squared() / n as f64;
    let inv = spd_inverse(&gram).ok_or(NumError::WeakOrCollinearInstruments { condition })?;
    Ok(FitResult {
        labels: xhat.labels().to_vec(),
        coefficients: beta.iter().copied().collect(),
        covariance: inv * sigma2,
        residual_variance: sigma2,
        n_used: n,
        rank: RankStatus::FullRank,
        condition_number: condition,
    })
}
