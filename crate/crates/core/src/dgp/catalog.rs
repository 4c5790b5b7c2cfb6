use super::spec::{ComplianceModel, OutcomeModel, ScenarioSpec, Study};
use super::DgpError;
use crate::numkernel::expit;

pub const SIM1_SERIES: [&str; 5] = ["A", "B", "C", "D", "E"];
pub const SIM1_MECHANISMS: [&str; 8] = ["1", "2a", "2b", "2c", "3a", "3b", "4a", "4b"];

/// Log-odds shift in compliance between healthier and less healthy
/// participants.
pub const COMPLIANCE_SLOPE: f64 = 1.5;
/// Extra log-odds slope in the new-treatment arm for the "b"/"c" mechanisms,
/// i.e. the covariate-by-arm interaction in compliance.
pub const INTERACTION_SHIFT: f64 = 0.5;
/// Arm compliance gap for the unequal-compliance mechanisms (capped so the
/// higher arm stays below 1).
pub const ARM_GAP: f64 = 0.2;
pub const P_X: f64 = 0.5;
pub const P_U: f64 = 0.5;
pub const DELTA0: f64 = 1.0;
pub const MARGIN_TRUTH: f64 = -0.3;

struct Series {
    n: usize,
    compliance: f64,
    delta: f64,
    beta: f64,
}

fn series(code: &str) -> Option<Series> {
    let s = match code {
        "A" => Series { n: 1000, compliance: 0.7, delta: MARGIN_TRUTH, beta: 0.5 },
        "B" => Series { n: 200, compliance: 0.7, delta: MARGIN_TRUTH, beta: 0.5 },
        "C" => Series { n: 200, compliance: 0.9, delta: MARGIN_TRUTH, beta: 0.5 },
        "D" => Series { n: 1000, compliance: 0.7, delta: 0.0, beta: 0.5 },
        "E" => Series { n: 1000, compliance: 0.7, delta: MARGIN_TRUTH, beta: 0.25 },
        _ => return None,
    };
    Some(s)
}

/// Intercept `a` with `Σ P(x)P(u) expit(a + sx·x + su·u) = target`.
pub fn solve_intercept(target: f64, p_x: f64, p_u: f64, sx: f64, su: f64) -> f64 {
    let rate = |a: f64| {
        let mut r = 0.0;
        for x in [0.0, 1.0] {
            for u in [0.0, 1.0] {
                let w = (if x == 1.0 { p_x } else { 1.0 - p_x }) * (if u == 1.0 { p_u } else { 1.0 - p_u });
                r += w * expit(a + sx * x + su * u);
            }
        }
        r
    };
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Arm-specific slopes on x and u plus target rates, turned into the
/// γ parametrization.
struct ArmCompliance {
    p0: f64,
    p1: f64,
    x0: f64,
    x1: f64,
    u0: f64,
    u1: f64,
}

impl ArmCompliance {
    fn model(&self) -> ComplianceModel {
        let a0 = solve_intercept(self.p0, P_X, P_U, self.x0, self.u0);
        let a1 = solve_intercept(self.p1, P_X, P_U, self.x1, self.u1);
        ComplianceModel { g0: a0, gz: a1 - a0, gx: self.x0, gu: self.u0, gzx: self.x1 - self.x0, gzu: self.u1 - self.u0 }
    }
}

fn mechanism(code: &str, overall: f64) -> Option<ArmCompliance> {
    let g = COMPLIANCE_SLOPE;
    let h = INTERACTION_SHIFT;
    let gap = ARM_GAP.min(1.0 - overall);
    let (eq0, eq1) = (overall, overall);
    let (un0, un1) = (overall - gap / 2.0, overall + gap / 2.0);
    // Healthier participants (x = 1 or u = 1) comply less with the standard
    // treatment; in the "b"/"c" mechanisms that gradient is weaker in the new arm.
    let a = match code {
        "1" => ArmCompliance { p0: eq0, p1: eq1, x0: 0.0, x1: 0.0, u0: 0.0, u1: 0.0 },
        "2a" => ArmCompliance { p0: un0, p1: un1, x0: -g, x1: -g, u0: 0.0, u1: 0.0 },
        "2b" => ArmCompliance { p0: eq0, p1: eq1, x0: -g, x1: h - g, u0: 0.0, u1: 0.0 },
        "2c" => ArmCompliance { p0: un0, p1: un1, x0: -g, x1: h - g, u0: 0.0, u1: 0.0 },
        "3a" => ArmCompliance { p0: un0, p1: un1, x0: -g, x1: -g, u0: -g, u1: -g },
        "3b" => ArmCompliance { p0: eq0, p1: eq1, x0: -g, x1: h - g, u0: -g, u1: h - g },
        "4a" => ArmCompliance { p0: un0, p1: un1, x0: 0.0, x1: 0.0, u0: -g, u1: -g },
        "4b" => ArmCompliance { p0: eq0, p1: eq1, x0: 0.0, x1: 0.0, u0: -g, u1: h - g },
        _ => return None,
    };
    Some(a)
}

/// Constant-effect scenarios, ids `"A-1"` … `"E-4b"`.
pub fn catalog_sim1(id: &str) -> Result<ScenarioSpec, DgpError> {
    let unknown = || DgpError::UnknownScenario(id.to_string());
    let (s, m) = id.split_once('-').ok_or_else(unknown)?;
    let series = series(s).ok_or_else(unknown)?;
    let arms = mechanism(m, series.compliance).ok_or_else(unknown)?;
    Ok(ScenarioSpec {
        label: id.to_string(),
        study: Study::Constant,
        n: series.n,
        p_x: P_X,
        p_u: P_U,
        compliance: arms.model(),
        outcome: OutcomeModel {
            beta0: 0.0,
            delta0: DELTA0,
            delta1: DELTA0 + series.delta,
            beta_x: series.beta,
            beta_u: series.beta,
            tau_x: 0.0,
            tau_u: 0.0,
            sigma: 1.0,
        },
    })
}

/// Heterogeneous-effect scenarios `"TEH(X)-1"` … `"TEH(X)-4"` and
/// `"TEH(U)-5"` … `"TEH(U)-8"`.
///
/// Within each moderator: 1/5 moderate compliance difference and moderate
/// heterogeneity, 2/6 moderate difference and large heterogeneity, 3/7 large
/// difference and moderate heterogeneity, 4/8 large and large. δ1 is solved
/// so the estimand is −0.3 throughout.
pub fn catalog_sim2(id: &str) -> Result<ScenarioSpec, DgpError> {
    let unknown = || DgpError::UnknownScenario(id.to_string());
    let (moderator, num) = id.split_once('-').ok_or_else(unknown)?;
    let num: usize = num.parse().map_err(|_| unknown())?;
    let on_x = match (moderator, num) {
        ("TEH(X)", 1..=4) => true,
        ("TEH(U)", 5..=8) => false,
        _ => return Err(unknown()),
    };
    let k = (num - 1) % 4;
    let large_difference = k >= 2;
    let large_teh = k % 2 == 1;
    let (p0, p1, s0, s1) = if large_difference { (0.85, 0.55, -1.0, 2.5) } else { (0.75, 0.65, -1.0, 1.0) };
    let tau = if large_teh { 1.0 } else { 0.5 };
    let arms = if on_x {
        ArmCompliance { p0, p1, x0: s0, x1: s1, u0: 0.0, u1: 0.0 }
    } else {
        ArmCompliance { p0, p1, x0: 0.0, x1: 0.0, u0: s0, u1: s1 }
    };
    let (tau_x, tau_u) = if on_x { (tau, 0.0) } else { (0.0, tau) };
    let delta1 = DELTA0 + MARGIN_TRUTH - tau_x * P_X - tau_u * P_U;
    Ok(ScenarioSpec {
        label: id.to_string(),
        study: Study::Heterogeneous,
        n: 1000,
        p_x: P_X,
        p_u: P_U,
        compliance: arms.model(),
        outcome: OutcomeModel {
            beta0: 0.0,
            delta0: DELTA0,
            delta1,
            beta_x: 0.5,
            beta_u: 0.5,
            tau_x,
            tau_u,
            sigma: 1.0,
        },
    })
}

pub fn sim1_ids() -> Vec<String> {
    SIM1_SERIES
        .iter()
        .flat_map(|s| SIM1_MECHANISMS.iter().map(move |m| format!("{s}-{m}")))
        .collect()
}

pub fn sim2_ids() -> Vec<String> {
    (1..=4).map(|i| format!("TEH(X)-{i}")).chain((5..=8).map(|i| format!("TEH(U)-{i}"))).collect()
}

/// Looks an id up in either catalog.
pub fn catalog(id: &str) -> Result<ScenarioSpec, DgpError> {
    if id.starts_with("TEH(") {
        catalog_sim2(id)
    } else {
        catalog_sim1(id)
    }
}

/// Every frozen scenario, study 1 first.
pub fn full_catalog() -> Vec<ScenarioSpec> {
    sim1_ids()
        .iter()
        .chain(sim2_ids().iter())
        .map(|id| catalog(id).expect("catalog ids are valid"))
        .collect()
}
