use serde::{Deserialize, Serialize};

use super::EstimatorError;

/// A named baseline covariate column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariate {
    pub name: String,
    pub values: Vec<f64>,
}

/// Per-participant trial records.
///
/// `z` is the randomized arm (1 = new treatment), `c` the all-or-nothing
/// compliance indicator. Covariates are observed baseline variables; the
/// simulation's latent `u` is carried separately and never reaches an
/// estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    y: Vec<f64>,
    z: Vec<u8>,
    c: Vec<u8>,
    covariates: Vec<Covariate>,
    latent: Option<Vec<u8>>,
}

impl TrialDataset {
    pub fn new(
        y: Vec<f64>,
        z: Vec<u8>,
        c: Vec<u8>,
        covariates: Vec<Covariate>,
    ) -> Result<Self, EstimatorError> {
        let n = y.len();
        let bad = |msg: String| Err(EstimatorError::InvalidDataset(msg));
        if z.len() != n || c.len() != n {
            return bad(format!("column lengths differ: y {n}, z {}, c {}", z.len(), c.len()));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return bad(format!("y is missing or non-finite at row {i}"));
        }
        if let Some(i) = z.iter().position(|&v| v > 1) {
            return bad(format!("z is not binary at row {i}"));
        }
        if let Some(i) = c.iter().position(|&v| v > 1) {
            return bad(format!("c is not binary at row {i}"));
        }
        for cov in &covariates {
            if cov.values.len() != n {
                return bad(format!("covariate '{}' has {} rows, expected {n}", cov.name, cov.values.len()));
            }
            if let Some(i) = cov.values.iter().position(|v| !v.is_finite()) {
                return bad(format!("covariate '{}' is missing or non-finite at row {i}", cov.name));
            }
            if ["y", "z", "c"].contains(&cov.name.as_str()) || cov.name.starts_with('_') {
                return bad(format!("covariate name '{}' is reserved", cov.name));
            }
        }
        for (i, a) in covariates.iter().enumerate() {
            if covariates[..i].iter().any(|b| b.name == a.name) {
                return bad(format!("duplicate covariate '{}'", a.name));
            }
        }
        let arm1 = z.iter().filter(|&&v| v == 1).count();
        if arm1 == 0 || arm1 == n {
            return bad("both arms must be non-empty".into());
        }
        Ok(Self { y, z, c, covariates, latent: None })
    }

    /// Simulation-style record set with one observed covariate `x` and an
    /// optional latent `u`.
    pub fn with_binary_covariate(
        y: Vec<f64>,
        z: Vec<u8>,
        c: Vec<u8>,
        x: Vec<u8>,
        u: Option<Vec<u8>>,
    ) -> Result<Self, EstimatorError> {
        let xv = x.iter().map(|&v| v as f64).collect();
        let mut d = Self::new(y, z, c, vec![Covariate { name: "x".into(), values: xv }])?;
        if let Some(u) = &u {
            if u.len() != d.n() || u.iter().any(|&v| v > 1) {
                return Err(EstimatorError::InvalidDataset("latent u must be binary with n rows".into()));
            }
        }
        d.latent = u;
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[u8] {
        &self.z
    }

    pub fn c(&self) -> &[u8] {
        &self.c
    }

    pub fn covariates(&self) -> &[Covariate] {
        &self.covariates
    }

    pub fn covariate(&self, name: &str) -> Option<&[f64]> {
        self.covariates.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn latent(&self) -> Option<&[u8]> {
        self.latent.as_deref()
    }

    /// Receipt of standard treatment: `z = 0 ∧ c = 1`.
    pub fn c0(&self) -> Vec<f64> {
        self.z.iter().zip(&self.c).map(|(&z, &c)| ((z == 0) && (c == 1)) as u8 as f64).collect()
    }

    /// Receipt of new treatment: `z = 1 ∧ c = 1`.
    pub fn c1(&self) -> Vec<f64> {
        self.z.iter().zip(&self.c).map(|(&z, &c)| ((z == 1) && (c == 1)) as u8 as f64).collect()
    }

    pub fn z_f64(&self) -> Vec<f64> {
        self.z.iter().map(|&v| v as f64).collect()
    }

    /// Rows kept in order; the latent column follows along.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            z: rows.iter().map(|&i| self.z[i]).collect(),
            c: rows.iter().map(|&i| self.c[i]).collect(),
            covariates: self
                .covariates
                .iter()
                .map(|cov| Covariate {
                    name: cov.name.clone(),
                    values: rows.iter().map(|&i| cov.values[i]).collect(),
                })
                .collect(),
            latent: self.latent.as_ref().map(|u| rows.iter().map(|&i| u[i]).collect()),
        }
    }

    /// Copy with the latent column removed, as an analyst would see it.
    pub fn observed(&self) -> Self {
        Self { latent: None, ..self.clone() }
    }

    /// Copy with the outcome replaced (same length required).
    pub fn with_outcome(&self, y: Vec<f64>) -> Result<Self, EstimatorError> {
        if y.len() != self.n() {
            return Err(EstimatorError::InvalidDataset("replacement outcome has wrong length".into()));
        }
        Ok(Self { y, ..self.clone() })
    }

    pub fn compliers_in_arm(&self, arm: u8) -> usize {
        self.z.iter().zip(&self.c).filter(|(&z, &c)| z == arm && c == 1).count()
    }

    pub fn arm_size(&self, arm: u8) -> usize {
        self.z.iter().filter(|&&z| z == arm).count()
    }
}
