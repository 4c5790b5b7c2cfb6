use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DgpError;
use crate::numkernel::expit;

/// Logit-scale compliance model
/// `γ0 + γZ z + γX x + γU u + γZX zx + γZU zu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplianceModel {
    pub g0: f64,
    pub gz: f64,
    pub gx: f64,
    pub gu: f64,
    pub gzx: f64,
    pub gzu: f64,
}

impl ComplianceModel {
    pub const ALWAYS: ComplianceModel = ComplianceModel { g0: 40.0, gz: 0.0, gx: 0.0, gu: 0.0, gzx: 0.0, gzu: 0.0 };

    pub fn linear_predictor(&self, z: u8, x: u8, u: u8) -> f64 {
        let (z, x, u) = (z as f64, x as f64, u as f64);
        self.g0 + self.gz * z + self.gx * x + self.gu * u + self.gzx * z * x + self.gzu * z * u
    }

    pub fn probability(&self, z: u8, x: u8, u: u8) -> f64 {
        expit(self.linear_predictor(z, x, u))
    }
}

/// Outcome model `y = β0 + δ0·[std] + (δ1 + τX x + τU u)·[new] + βX x + βU u + σ ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeModel {
    pub beta0: f64,
    /// Standard treatment versus no treatment.
    pub delta0: f64,
    /// New treatment versus no treatment, at x = u = 0.
    pub delta1: f64,
    pub beta_x: f64,
    pub beta_u: f64,
    pub tau_x: f64,
    pub tau_u: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    /// Constant treatment effects.
    Constant,
    /// Effect of the new treatment varies with x or u.
    Heterogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub label: String,
    pub study: Study,
    /// Participants per dataset, allocated 1:1 by fair coin.
    pub n: usize,
    pub p_x: f64,
    pub p_u: f64,
    pub compliance: ComplianceModel,
    pub outcome: OutcomeModel,
}

/// A (z, x, u) cell with its population share and compliance probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub z: u8,
    pub x: u8,
    pub u: u8,
    /// `P(x) P(u)` within the arm.
    pub weight: f64,
    pub compliance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `E[Y(new, forced)] − E[Y(standard, forced)]`.
    pub delta: f64,
    pub p0: f64,
    pub p1: f64,
    pub cells: Vec<Cell>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), DgpError> {
        let bad = |m: String| Err(DgpError::InvalidSpec { label: self.label.clone(), reason: m });
        if self.n < 20 || self.n % 2 != 0 {
            return bad(format!("n = {} must be even and at least 20", self.n));
        }
        for (name, p) in [("p_x", self.p_x), ("p_u", self.p_u)] {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("{name} = {p} must lie in (0, 1)"));
            }
        }
        let c = &self.compliance;
        let o = &self.outcome;
        let all = [c.g0, c.gz, c.gx, c.gu, c.gzx, c.gzu, o.beta0, o.delta0, o.delta1, o.beta_x, o.beta_u, o.tau_x, o.tau_u];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("coefficients must be finite".into());
        }
        if !(o.sigma >= 0.0 && o.sigma.is_finite()) {
            return bad(format!("sigma = {} must be finite and non-negative", o.sigma));
        }
        match self.study {
            Study::Constant if o.tau_x != 0.0 || o.tau_u != 0.0 => {
                bad("constant-effect scenarios need tau_x = tau_u = 0".into())
            }
            Study::Heterogeneous if (o.tau_x != 0.0) == (o.tau_u != 0.0) => {
                bad("heterogeneous scenarios need exactly one of tau_x, tau_u nonzero".into())
            }
            _ => Ok(()),
        }
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario spec serializes");
        let hash = Sha256::digest(&json);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(8);
        for z in 0..2u8 {
            for x in 0..2u8 {
                for u in 0..2u8 {
                    let wx = if x == 1 { self.p_x } else { 1.0 - self.p_x };
                    let wu = if u == 1 { self.p_u } else { 1.0 - self.p_u };
                    out.push(Cell { z, x, u, weight: wx * wu, compliance: self.compliance.probability(z, x, u) });
                }
            }
        }
        out
    }

    /// Analytic compliance rate in arm `z`.
    pub fn arm_compliance(&self, z: u8) -> f64 {
        self.cells().iter().filter(|c| c.z == z).map(|c| c.weight * c.compliance).sum()
    }

    /// Mean outcome given (z, x, u), averaging over compliance.
    pub fn cell_mean(&self, z: u8, x: u8, u: u8) -> f64 {
        let o = &self.outcome;
        let (xf, uf) = (x as f64, u as f64);
        let base = o.beta0 + o.beta_x * xf + o.beta_u * uf;
        let effect = if z == 1 { o.delta1 + o.tau_x * xf + o.tau_u * uf } else { o.delta0 };
        base + self.compliance.probability(z, x, u) * effect
    }

    /// Analytic `E[y | z]`.
    pub fn expected_arm_mean(&self, z: u8) -> f64 {
        self.cells().iter().filter(|c| c.z == z).map(|c| c.weight * self.cell_mean(z, c.x, c.u)).sum()
    }

    /// Analytic `Var[y | z]` by the law of total variance over cells and
    /// compliance.
    pub fn expected_arm_variance(&self, z: u8) -> f64 {
        let o = &self.outcome;
        let mean = self.expected_arm_mean(z);
        let mut second = 0.0;
        for c in self.cells().iter().filter(|c| c.z == z) {
            let (xf, uf) = (c.x as f64, c.u as f64);
            let base = o.beta0 + o.beta_x * xf + o.beta_u * uf;
            let effect = if z == 1 { o.delta1 + o.tau_x * xf + o.tau_u * uf } else { o.delta0 };
            let m1 = base + effect;
            second += c.weight * (c.compliance * m1 * m1 + (1.0 - c.compliance) * base * base);
        }
        second - mean * mean + o.sigma * o.sigma
    }
}

/// Analytic estimand and compliance rates.
///
/// Forcing everyone onto the new treatment gives mean
/// `β0 + δ1 + τX pX + τU pU + βX pX + βU pU`; forcing everyone onto the
/// standard gives `β0 + δ0 + βX pX + βU pU`. Their difference is
/// `δ1 − δ0 + τX pX + τU pU`.
pub fn true_estimand(spec: &ScenarioSpec) -> GroundTruth {
    let o = &spec.outcome;
    GroundTruth {
        delta: o.delta1 - o.delta0 + o.tau_x * spec.p_x + o.tau_u * spec.p_u,
        p0: spec.arm_compliance(0),
        p1: spec.arm_compliance(1),
        cells: spec.cells(),
    }
}
