use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::design::DesignMatrix;
use super::linalg::{condition_number, CONDITION_LIMIT};
use super::NumError;

/// Convergence threshold on `max |X'(c − p)|`.
pub const IRLS_TOL: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 100;

/// A covariate pattern whose outcomes are all 0 or all 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationCell {
    pub pattern: Vec<f64>,
    /// The common outcome (0 or 1), which is also the fitted probability.
    pub outcome: u8,
    pub rows: usize,
}

/// Logistic regression fit with perfect-prediction bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitFit {
    pub labels: Vec<String>,
    /// Logit-scale coefficients; omitted columns carry 0.
    pub coefficients: Vec<f64>,
    /// Fitted `P(c = 1)` per input row; rows in separation cells get exactly
    /// their cell's outcome.
    pub fitted: Vec<f64>,
    pub separation_cells: Vec<SeparationCell>,
    /// Rows belonging to separation cells, ascending.
    pub dropped: Vec<usize>,
    /// Columns removed because they became collinear once separated rows
    /// were dropped.
    pub omitted: Vec<String>,
    pub converged: bool,
    pub iterations: usize,
    /// `max |X'(c − p)|` at the returned coefficients.
    pub max_score: f64,
}

pub(crate) fn expit(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn log_likelihood(eta: &DVector<f64>, c: &[f64]) -> f64 {
    eta.iter()
        .zip(c)
        .map(|(&e, &ci)| {
            // log(1 + exp(e)) computed stably
            let softplus = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
            ci * e - softplus
        })
        .sum()
}

/// Greedy left-to-right column selection keeping the Gram matrix well
/// conditioned.
fn independent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..x.ncols() {
        let mut trial = kept.clone();
        trial.push(j);
        if trial.len() > x.nrows() {
            break;
        }
        let sub = x.select_columns(trial.iter());
        let g = sub.transpose() * &sub;
        if condition_number(&g) <= CONDITION_LIMIT {
            kept = trial;
        }
    }
    kept
}

/// Newton/IRLS maximization of the Bernoulli log-likelihood.
///
/// When the design is saturated (at most as many distinct covariate patterns
/// as columns), patterns whose outcomes are all 0 or all 1 are recorded as
/// separation cells and their rows are dropped before fitting (the same
/// "perfect prediction" treatment common statistics packages apply). Any
/// column that becomes collinear on the remaining rows is omitted with a zero
/// coefficient. Non-convergence is reported through `converged = false`
/// together with the partial fit.
pub fn logit_fit(design: &DesignMatrix, c: &[u8]) -> Result<LogitFit, NumError> {
    let n = design.rows();
    if c.len() != n {
        return Err(NumError::DimensionMismatch(format!(
            "design has {n} rows but outcome has length {}",
            c.len()
        )));
    }
    if let Some(i) = c.iter().position(|&v| v > 1) {
        return Err(NumError::ImproperInput(format!("outcome at row {i} is not binary")));
    }

    // Group rows by exact covariate pattern, in order of first appearance.
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut cells: Vec<(Vec<f64>, usize, usize)> = Vec::new(); // pattern, count, successes
    let mut cell_of = Vec::with_capacity(n);
    for i in 0..n {
        let row = design.row(i);
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        let id = *index.entry(key).or_insert_with(|| {
            cells.push((row.clone(), 0, 0));
            cells.len() - 1
        });
        cells[id].1 += 1;
        cells[id].2 += c[i] as usize;
        cell_of.push(id);
    }
    // Only a saturated design (no more patterns than columns) sends a
    // homogeneous pattern's fitted probability to 0 or 1.
    let saturated = cells.len() <= design.cols();
    let separated: Vec<Option<u8>> = cells
        .iter()
        .map(|(_, count, succ)| match *succ {
            _ if !saturated => None,
            0 => Some(0),
            s if s == *count => Some(1),
            _ => None,
        })
        .collect();
    let separation_cells = cells
        .iter()
        .zip(&separated)
        .filter_map(|((pattern, count, _), s)| {
            s.map(|outcome| SeparationCell { pattern: pattern.clone(), outcome, rows: *count })
        })
        .collect();
    let dropped: Vec<usize> = (0..n).filter(|&i| separated[cell_of[i]].is_some()).collect();
    let kept_rows: Vec<usize> = (0..n).filter(|&i| separated[cell_of[i]].is_none()).collect();

    let k = design.cols();
    let mut coefficients = vec![0.0; k];
    let mut fitted = vec![0.0; n];
    for &i in &dropped {
        fitted[i] = separated[cell_of[i]].unwrap() as f64;
    }

    if kept_rows.is_empty() {
        return Ok(LogitFit {
            labels: design.labels().to_vec(),
            coefficients,
            fitted,
            separation_cells,
            dropped,
            omitted: Vec::new(),
            converged: true,
            iterations: 0,
            max_score: 0.0,
        });
    }

    let x_rows = design.matrix().select_rows(kept_rows.iter());
    let cols = independent_columns(&x_rows);
    let omitted = (0..k)
        .filter(|j| !cols.contains(j))
        .map(|j| design.labels()[j].clone())
        .collect();
    let x = x_rows.select_columns(cols.iter());
    let ck: Vec<f64> = kept_rows.iter().map(|&i| c[i] as f64).collect();
    let cv = DVector::from_column_slice(&ck);

    let mut beta = DVector::<f64>::zeros(cols.len());
    let mut eta = &x * &beta;
    let mut ll = log_likelihood(&eta, &ck);
    let mut converged = false;
    let mut iterations = 0;
    let mut max_score = f64::INFINITY;
    while iterations <= IRLS_MAX_ITER {
        let p = eta.map(expit);
        let score = x.transpose() * (&cv - &p);
        max_score = score.amax();
        if max_score < IRLS_TOL {
            converged = true;
            break;
        }
        if iterations == IRLS_MAX_ITER {
            break;
        }
        let mut xw = x.clone();
        for (i, pi) in p.iter().enumerate() {
            xw.row_mut(i).scale_mut(pi * (1.0 - pi));
        }
        let info = x.transpose() * xw;
        let Some(chol) = info.cholesky() else { break };
        let step = chol.solve(&score);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &beta + &step * t;
            let cand_eta = &x * &cand;
            let cand_ll = log_likelihood(&cand_eta, &ck);
            if cand_ll.is_finite() && cand_ll >= ll - 1e-12 * ll.abs().max(1.0) {
                beta = cand;
                eta = cand_eta;
                ll = cand_ll;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }
    for (slot, &j) in cols.iter().enumerate() {
        coefficients[j] = beta[slot];
    }
    for (r, &i) in kept_rows.iter().enumerate() {
        fitted[i] = expit(eta[r]);
    }
    Ok(LogitFit {
        labels: design.labels().to_vec(),
        coefficients,
        fitted,
        separation_cells,
        dropped,
        omitted,
        converged,
        iterations,
        max_score,
    })
}
