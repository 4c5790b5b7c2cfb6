use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::design::DesignMatrix;
use super::linalg::{cholesky_lower, solve_lower, solve_upper_t};
use super::NumError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub sd: f64,
}

impl NormalPrior {
    pub fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VariancePrior {
    /// σ² ~ inverse-gamma(shape, scale), updated each sweep.
    InverseGamma { shape: f64, scale: f64 },
    /// σ² held fixed at the given value.
    Known { variance: f64 },
}

impl Default for VariancePrior {
    fn default() -> Self {
        VariancePrior::InverseGamma { shape: 0.001, scale: 0.001 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl ChainConfig {
    pub const DEFAULT_ITERATIONS: usize = 10_000;
    pub const DEFAULT_BURN_IN: usize = 1_000;
    pub const MIN_ITERATIONS: usize = 1_000;

    pub fn with_seed(seed: u64) -> Self {
        Self { iterations: Self::DEFAULT_ITERATIONS, burn_in: Self::DEFAULT_BURN_IN, seed }
    }

    pub fn validate(&self) -> Result<(), NumError> {
        if self.iterations < Self::MIN_ITERATIONS {
            return Err(NumError::ImproperInput(format!(
                "chain needs at least {} iterations, got {}",
                Self::MIN_ITERATIONS,
                self.iterations
            )));
        }
        if self.burn_in >= self.iterations {
            return Err(NumError::ImproperInput(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    pub fn kept(&self) -> usize {
        self.iterations - self.burn_in
    }
}

/// Post-burn-in coefficient draws, row-major (`kept × k`).
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub labels: Vec<String>,
    k: usize,
    values: Vec<f64>,
}

impl PosteriorDraws {
    pub fn kept(&self) -> usize {
        self.values.len() / self.k
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.k).copied().collect()
    }

    /// Draws of the linear combination `Σ weights[j] βⱼ`.
    pub fn contrast(&self, weights: &[f64]) -> Vec<f64> {
        self.values
            .chunks_exact(self.k)
            .map(|row| row.iter().zip(weights).map(|(b, w)| b * w).sum())
            .collect()
    }

    pub fn summary(&self) -> PosteriorSummary {
        PosteriorSummary {
            labels: self.labels.clone(),
            params: (0..self.k).map(|j| ScalarSummary::from_draws(&self.column(j))).collect(),
            kept: self.kept(),
        }
    }
}

/// Marginal summary of one scalar chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub q975: f64,
    /// Batch-means Monte-Carlo standard error of `mean`.
    pub mcse: f64,
    /// Split-chain potential scale reduction factor.
    pub split_rhat: f64,
}

impl ScalarSummary {
    pub fn from_draws(draws: &[f64]) -> Self {
        let n = draws.len();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut sorted = draws.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        Self {
            mean,
            sd: var.sqrt(),
            q025: quantile_sorted(&sorted, 0.025),
            q05: quantile_sorted(&sorted, 0.05),
            q50: quantile_sorted(&sorted, 0.5),
            q95: quantile_sorted(&sorted, 0.95),
            q975: quantile_sorted(&sorted, 0.975),
            mcse: batch_means_mcse(draws),
            split_rhat: split_rhat(draws),
        }
    }
}

/// Per-parameter posterior summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub labels: Vec<String>,
    pub params: Vec<ScalarSummary>,
    pub kept: usize,
}

impl PosteriorSummary {
    pub fn get(&self, label: &str) -> Option<&ScalarSummary> {
        self.labels.iter().position(|l| l == label).map(|j| &self.params[j])
    }
}

/// Linear-interpolation quantile (type 7) of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn batch_means_mcse(draws: &[f64]) -> f64 {
    let n = draws.len();
    let batches = (n as f64).sqrt().floor() as usize;
    if batches < 2 {
        return f64::NAN;
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| draws[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

fn split_rhat(draws: &[f64]) -> f64 {
    let half = draws.len() / 2;
    if half < 2 {
        return f64::NAN;
    }
    let parts = [&draws[..half], &draws[half..2 * half]];
    let stats: Vec<(f64, f64)> = parts
        .iter()
        .map(|p| {
            let m = p.iter().sum::<f64>() / half as f64;
            let v = p.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (half - 1) as f64;
            (m, v)
        })
        .collect();
    let w = (stats[0].1 + stats[1].1) / 2.0;
    let grand = (stats[0].0 + stats[1].0) / 2.0;
    let b = half as f64 * stats.iter().map(|(m, _)| (m - grand).powi(2)).sum::<f64>();
    if w == 0.0 {
        return 1.0;
    }
    let var_plus = (half as f64 - 1.0) / half as f64 * w + b / half as f64;
    (var_plus / w).sqrt()
}

/// Runs the conjugate Gibbs sampler and returns the kept coefficient draws.
///
/// The data enter only through `X'X`, `X'y`, `y'y` and `n`, so row order does
/// not affect the chain beyond floating-point summation order. Each sweep
/// draws β jointly from its multivariate normal full conditional given σ²,
/// then σ² from its inverse-gamma full conditional given β.
pub fn gibbs_linear_draws(
    y: &[f64],
    design: &DesignMatrix,
    priors: &[NormalPrior],
    variance: VariancePrior,
    cfg: &ChainConfig,
) -> Result<PosteriorDraws, NumError> {
    cfg.validate()?;
    let n = design.rows();
    let k = design.cols();
    if y.len() != n {
        return Err(NumError::DimensionMismatch(format!(
            "design has {n} rows but y has length {}",
            y.len()
        )));
    }
    if priors.len() != k {
        return Err(NumError::DimensionMismatch(format!("{} priors for {k} columns", priors.len())));
    }
    if let Some(p) = priors.iter().find(|p| !(p.sd > 0.0) || !p.sd.is_finite() || !p.mean.is_finite()) {
        return Err(NumError::ImproperInput(format!("prior N({}, {}) is not proper", p.mean, p.sd)));
    }
    match variance {
        VariancePrior::InverseGamma { shape, scale } if !(shape > 0.0 && scale > 0.0) => {
            return Err(NumError::ImproperInput(format!(
                "inverse-gamma({shape}, {scale}) needs positive parameters"
            )));
        }
        VariancePrior::Known { variance } if !(variance > 0.0) => {
            return Err(NumError::ImproperInput(format!("known variance {variance} must be positive")));
        }
        _ => {}
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(NumError::ImproperInput(format!("non-finite outcome at row {i}")));
    }

    // Sufficient statistics.
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    let mut yty = 0.0;
    let cols: Vec<&[f64]> = (0..k).map(|j| design.column(j)).collect();
    for a in 0..k {
        xty[a] = cols[a].iter().zip(y).map(|(x, y)| x * y).sum();
        for b in 0..=a {
            let s: f64 = cols[a].iter().zip(cols[b]).map(|(p, q)| p * q).sum();
            xtx[a * k + b] = s;
            xtx[b * k + a] = s;
        }
    }
    for v in y {
        yty += v * v;
    }
    let prior_prec: Vec<f64> = priors.iter().map(|p| 1.0 / (p.sd * p.sd)).collect();
    let prior_shift: Vec<f64> = priors.iter().zip(&prior_prec).map(|(p, q)| p.mean * q).collect();

    let mut sigma2 = match variance {
        VariancePrior::Known { variance } => variance,
        VariancePrior::InverseGamma { .. } => {
            let mean = y.iter().sum::<f64>() / n as f64;
            let v = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(2) as f64;
            if v > 0.0 {
                v
            } else {
                1.0
            }
        }
    };

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut prec = vec![0.0; k * k];
    let mut mean = vec![0.0; k];
    let mut beta = vec![0.0; k];
    let mut values = Vec::with_capacity(cfg.kept() * k);

    for iter in 0..cfg.iterations {
        let inv_s2 = 1.0 / sigma2;
        for a in 0..k {
            for b in 0..=a {
                prec[a * k + b] = xtx[a * k + b] * inv_s2;
            }
            prec[a * k + a] += prior_prec[a];
            mean[a] = xty[a] * inv_s2 + prior_shift[a];
        }
        if !cholesky_lower(&mut prec, k) {
            return Err(NumError::ChainDiverged { iteration: iter });
        }
        // mean = Q⁻¹ b, beta = mean + L⁻ᵀ ε
        solve_lower(&prec, k, &mut mean);
        solve_upper_t(&prec, k, &mut mean);
        for b in beta.iter_mut() {
            *b = StandardNormal.sample(&mut rng);
        }
        solve_upper_t(&prec, k, &mut beta);
        for a in 0..k {
            beta[a] += mean[a];
        }

        if let VariancePrior::InverseGamma { shape, scale } = variance {
            let mut quad = 0.0;
            let mut cross = 0.0;
            for a in 0..k {
                cross += beta[a] * xty[a];
                let mut row = 0.0;
                for b in 0..k {
                    row += xtx[a * k + b] * beta[b];
                }
                quad += beta[a] * row;
            }
            let ssr = (yty - 2.0 * cross + quad).max(0.0);
            let post_shape = shape + 0.5 * n as f64;
            let post_rate = scale + 0.5 * ssr;
            let g = Gamma::new(post_shape, 1.0 / post_rate)
                .map_err(|_| NumError::ChainDiverged { iteration: iter })?;
            let precision: f64 = g.sample(&mut rng);
            sigma2 = 1.0 / precision;
            if !sigma2.is_finite() || sigma2 <= 0.0 {
                return Err(NumError::ChainDiverged { iteration: iter });
            }
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(NumError::ChainDiverged { iteration: iter });
        }
        if iter >= cfg.burn_in {
            values.extend_from_slice(&beta);
        }
    }
    Ok(PosteriorDraws { labels: design.labels().to_vec(), k, values })
}

/// Conjugate Gibbs sampler for `y = Xβ + e`, `e ~ N(0, σ²)`, with independent
/// normal priors on β and an inverse-gamma (or fixed) σ².
pub fn gibbs_linear(
    y: &[f64],
    design: &DesignMatrix,
    priors: &[NormalPrior],
    variance: VariancePrior,
    cfg: &ChainConfig,
) -> Result<PosteriorSummary, NumError> {
    Ok(gibbs_linear_draws(y, design, priors, variance, cfg)?.summary())
}
