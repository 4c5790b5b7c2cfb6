use std::collections::BTreeMap;
use std::path::PathBuf;

use nitrial_core::dgp::{catalog, sim1_ids, sim2_ids};
use nitrial_core::estimators::NiRule;
use nitrial_core::mcharness::{default_estimators, ChainSettings, EstimatorSpec, StudyConfig, DEFAULT_NSIM};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 20240101;
pub const DEFAULT_OUTPUT_DIR: &str = "nitrial-out";

/// `simulate` configuration. Every field except `scenarios` has a default;
/// the echo written next to the results spells all of them out and can be
/// fed back unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfigFile {
    /// Catalog ids, or the selectors `sim1-all` / `sim2-all`.
    pub scenarios: Vec<String>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorSpec>,
    #[serde(default = "default_nsim")]
    pub nsim: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub level: Option<f64>,
    #[serde(default)]
    pub chain: ChainSettings,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Scenario id → spec digest. Checked against the built-in catalog when
    /// present.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub catalog: BTreeMap<String, String>,
}

fn default_nsim() -> usize {
    DEFAULT_NSIM
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_margin() -> f64 {
    NiRule::default().margin
}

fn default_threads() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(DEFAULT_OUTPUT_DIR)
}

/// Combines the optional `alpha` and `level` settings. Intervals are
/// two-sided at `level = 1 − 2·alpha`, so giving both requires them to agree.
pub fn resolve_rule(margin: f64, alpha: Option<f64>, level: Option<f64>) -> Result<NiRule, CliError> {
    let alpha = match (alpha, level) {
        (Some(a), Some(l)) => {
            if ((1.0 - 2.0 * a) - l).abs() > 1e-12 {
                return Err(CliError::Config(format!("level: {l} does not equal 1 - 2 * alpha for alpha = {a}")));
            }
            a
        }
        (Some(a), None) => a,
        (None, Some(l)) => {
            if !(l > 0.0 && l < 1.0) {
                return Err(CliError::Config(format!("level: {l} must lie in (0, 1)")));
            }
            (1.0 - l) / 2.0
        }
        (None, None) => NiRule::default().alpha,
    };
    NiRule::new(margin, alpha).map_err(|e| CliError::Config(format!("margin/alpha: {e}")))
}

impl StudyConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    fn scenario_ids(&self) -> Result<Vec<String>, CliError> {
        let mut ids: Vec<String> = Vec::new();
        for sel in &self.scenarios {
            let expanded = match sel.as_str() {
                "sim1-all" => sim1_ids(),
                "sim2-all" => sim2_ids(),
                id => vec![id.to_string()],
            };
            for id in expanded {
                if ids.contains(&id) {
                    return Err(CliError::Config(format!("scenarios: '{id}' selected twice")));
                }
                ids.push(id);
            }
        }
        if ids.is_empty() {
            return Err(CliError::Config("scenarios: at least one scenario is required".into()));
        }
        Ok(ids)
    }

    /// Study configuration plus the fully explicit echo.
    pub fn resolve(&self, threads_override: Option<usize>) -> Result<(StudyConfig, StudyConfigFile), CliError> {
        let rule = resolve_rule(self.margin, self.alpha, self.level)?;
        let ids = self.scenario_ids()?;
        let mut scenarios = Vec::with_capacity(ids.len());
        let mut digests = BTreeMap::new();
        for id in &ids {
            let spec = catalog(id).map_err(|e| CliError::Config(format!("scenarios: {e}")))?;
            digests.insert(id.clone(), spec.digest());
            scenarios.push(spec);
        }
        for (id, digest) in &self.catalog {
            match digests.get(id) {
                None => return Err(CliError::Config(format!("catalog.{id}: not among the selected scenarios"))),
                Some(d) if d != digest => {
                    return Err(CliError::Config(format!(
                        "catalog.{id}: digest {digest} does not match the built-in scenario ({d})"
                    )))
                }
                Some(_) => {}
            }
        }
        let threads = threads_override.unwrap_or(self.threads);
        let cfg = StudyConfig {
            scenarios,
            estimators: self.estimators.clone(),
            nsim: self.nsim,
            master_seed: self.master_seed,
            rule,
            chain: self.chain,
            threads,
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let echo = StudyConfigFile {
            scenarios: ids,
            estimators: self.estimators.clone(),
            nsim: self.nsim,
            master_seed: self.master_seed,
            margin: rule.margin,
            alpha: Some(rule.alpha),
            level: Some(rule.level()),
            chain: self.chain,
            threads,
            output_dir: self.output_dir.clone(),
            catalog: digests,
        };
        Ok((cfg, echo))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = StudyConfigFile::parse(r#"{"scenarios": ["A-1"]}"#).unwrap();
        assert_eq!(c.nsim, DEFAULT_NSIM);
        assert_eq!(c.estimators.len(), 8);
        let (cfg, echo) = c.resolve(None).unwrap();
        assert_eq!(cfg.rule, NiRule::default());
        assert_eq!(echo.level, Some(0.95));
        assert_eq!(echo.catalog.len(), 1);
    }

    #[test]
    fn unknown_keys_name_the_key() {
        let err = StudyConfigFile::parse(r#"{"scenarios": ["A-1"], "nsims": 3}"#).unwrap_err();
        assert!(err.to_string().contains("nsims"), "{err}");
    }

    #[test]
    fn alpha_and_level_must_agree() {
        assert!(resolve_rule(-0.3, Some(0.05), Some(0.9)).is_ok());
        assert!(resolve_rule(-0.3, Some(0.025), Some(0.9)).is_err());
        assert!((resolve_rule(-0.3, None, Some(0.9)).unwrap().alpha - 0.05).abs() < 1e-15);
    }

    #[test]
    fn selectors_expand() {
        let c = StudyConfigFile::parse(r#"{"scenarios": ["sim2-all"]}"#).unwrap();
        assert_eq!(c.resolve(None).unwrap().0.scenarios.len(), 8);
        let dup = StudyConfigFile::parse(r#"{"scenarios": ["sim2-all", "TEH(X)-1"]}"#).unwrap();
        assert!(dup.resolve(None).is_err());
    }

    #[test]
    fn digest_mismatch_is_a_config_error() {
        let c = StudyConfigFile::parse(r#"{"scenarios": ["A-1"], "catalog": {"A-1": "00"}}"#).unwrap();
        assert!(matches!(c.resolve(None), Err(CliError::Config(m)) if m.starts_with("catalog.A-1")));
    }
}
