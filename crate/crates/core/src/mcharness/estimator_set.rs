use serde::{Deserialize, Serialize};

use crate::dgp::ScenarioSpec;
use crate::estimators::{EstimatorKind, PriorSpec, SeparationPolicy, VAGUE_SD};

/// IV(Bayes) prior as configured for a study. Exactly one of `mean`
/// (absolute) and `offset` (added to the scenario's true standard-treatment
/// effect) must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesPrior {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    pub sd: f64,
    #[serde(default = "vague")]
    pub vague_sd: f64,
}

fn vague() -> f64 {
    VAGUE_SD
}

impl BayesPrior {
    pub fn offset(label: &str, offset: f64, sd: f64) -> Self {
        Self { label: label.into(), mean: None, offset: Some(offset), sd, vague_sd: VAGUE_SD }
    }

    pub fn absolute(label: &str, mean: f64, sd: f64) -> Self {
        Self { label: label.into(), mean: Some(mean), offset: None, sd, vague_sd: VAGUE_SD }
    }

    pub fn validate(&self) -> Result<(), String> {
        match (self.mean, self.offset) {
            (Some(_), Some(_)) => return Err(format!("prior '{}' sets both mean and offset", self.label)),
            (None, None) => return Err(format!("prior '{}' needs a mean or an offset", self.label)),
            _ => {}
        }
        if self.label.is_empty() || self.label.contains(['[', ']', ',', '"']) {
            return Err(format!("prior label '{}' must be non-empty without brackets, commas or quotes", self.label));
        }
        self.resolve(0.0).validate().map_err(|e| format!("prior '{}': {e}", self.label))
    }

    /// Concrete prior given the true standard-versus-nothing effect.
    pub fn resolve(&self, delta0: f64) -> PriorSpec {
        let mean = self.mean.unwrap_or_else(|| delta0 + self.offset.unwrap_or(0.0));
        PriorSpec { mean, sd: self.sd, vague_sd: self.vague_sd }
    }

    pub fn resolve_for(&self, spec: &ScenarioSpec) -> PriorSpec {
        self.resolve(spec.outcome.delta0)
    }
}

/// The four simulation priors: centred or shifted by +0.5, precise (sd 0.1)
/// or vague (sd 2).
pub fn standard_priors() -> Vec<BayesPrior> {
    vec![
        BayesPrior::offset("centred_precise", 0.0, 0.1),
        BayesPrior::offset("centred_vague", 0.0, 2.0),
        BayesPrior::offset("miscentred_precise", 0.5, 0.1),
        BayesPrior::offset("miscentred_vague", 0.5, 2.0),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", try_from = "RawEstimator")]
pub enum EstimatorSpec {
    Itt,
    Pp,
    Ipw {
        #[serde(default)]
        separation: SeparationPolicy,
    },
    IvInteraction,
    IvBayes {
        prior: BayesPrior,
    },
}

/// Flat wire form, so that stray keys are rejected for every estimator
/// (serde ignores them on unit variants of a tagged enum).
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimator {
    id: String,
    separation: Option<SeparationPolicy>,
    prior: Option<BayesPrior>,
}

impl TryFrom<RawEstimator> for EstimatorSpec {
    type Error = String;

    fn try_from(raw: RawEstimator) -> Result<Self, String> {
        let RawEstimator { id, separation, prior } = raw;
        let only = |allowed: &str| -> Result<(), String> {
            let extra = [("separation", separation.is_some()), ("prior", prior.is_some())]
                .into_iter()
                .find(|(k, set)| *set && *k != allowed);
            match extra {
                Some((k, _)) => Err(format!("estimator '{id}' does not take '{k}'")),
                None => Ok(()),
            }
        };
        match id.as_str() {
            "itt" => only("").map(|_| EstimatorSpec::Itt),
            "pp" => only("").map(|_| EstimatorSpec::Pp),
            "ipw" => only("separation").map(|_| EstimatorSpec::Ipw { separation: separation.unwrap_or_default() }),
            "iv_interaction" => only("").map(|_| EstimatorSpec::IvInteraction),
            "iv_bayes" => {
                only("prior")?;
                let prior = prior.ok_or("estimator 'iv_bayes' needs a prior")?;
                Ok(EstimatorSpec::IvBayes { prior })
            }
            other => Err(format!("unknown estimator '{other}', expected one of {}", Self::IDS.join(", "))),
        }
    }
}

impl EstimatorSpec {
    pub const IDS: [&'static str; 5] = ["itt", "pp", "ipw", "iv_interaction", "iv_bayes"];

    pub fn kind(&self) -> EstimatorKind {
        match self {
            EstimatorSpec::Itt => EstimatorKind::Itt,
            EstimatorSpec::Pp => EstimatorKind::PerProtocol,
            EstimatorSpec::Ipw { .. } => EstimatorKind::Ipw,
            EstimatorSpec::IvInteraction => EstimatorKind::IvInteraction,
            EstimatorSpec::IvBayes { .. } => EstimatorKind::IvBayes,
        }
    }

    /// Column label in result tables, e.g. `iv_bayes[centred_precise]`.
    pub fn label(&self) -> String {
        match self {
            EstimatorSpec::IvBayes { prior } => format!("iv_bayes[{}]", prior.label),
            EstimatorSpec::Ipw { separation: SeparationPolicy::KeepWeightOne } => "ipw[keep-weight-one]".into(),
            other => other.kind().id().into(),
        }
    }
}

/// ITT, PP, IPW, IV(interaction) and IV(Bayes) under the four standard priors.
pub fn default_estimators() -> Vec<EstimatorSpec> {
    let mut v = vec![
        EstimatorSpec::Itt,
        EstimatorSpec::Pp,
        EstimatorSpec::Ipw { separation: SeparationPolicy::Drop },
        EstimatorSpec::IvInteraction,
    ];
    v.extend(standard_priors().into_iter().map(|prior| EstimatorSpec::IvBayes { prior }));
    v
}
