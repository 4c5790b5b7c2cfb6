use std::path::Path;

use nitrial_core::estimators::{
    estimate_ipw_with, estimate_itt_with, estimate_iv_bayes_with, estimate_iv_interaction_with, estimate_pp_with,
    AnalysisOptions, Covariate, EstimateResult, EstimatorKind, NiRule, PriorSpec, SeparationPolicy, TrialDataset,
    VAGUE_SD,
};
use nitrial_core::mcharness::ChainSettings;
use nitrial_core::numkernel::ChainConfig;
use serde::{Deserialize, Serialize};

use crate::config::resolve_rule;
use crate::{num, read_text, write_atomic, CliError};

/// IV(Bayes) prior on the standard-treatment effect, with a display label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelledPrior {
    pub label: String,
    pub mean: f64,
    pub sd: f64,
    #[serde(default = "vague")]
    pub vague_sd: f64,
}

fn vague() -> f64 {
    VAGUE_SD
}

/// `analyze` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfigFile {
    /// Adjustment covariates (CSV columns) for ITT, PP and both IV estimators.
    #[serde(default)]
    pub covariates: Vec<String>,
    /// Compliance-model covariates for IPW; defaults to `covariates`.
    #[serde(default)]
    pub weight_model: Option<Vec<String>>,
    /// Estimator ids to run. Defaults to itt, pp and ipw, plus iv_interaction
    /// when instruments are given and iv_bayes when priors are given.
    #[serde(default)]
    pub estimators: Option<Vec<String>>,
    /// One IV(interaction) row per instrument covariate.
    #[serde(default)]
    pub instruments: Vec<String>,
    /// One IV(Bayes) row per prior.
    #[serde(default)]
    pub priors: Vec<LabelledPrior>,
    #[serde(default)]
    pub separation: SeparationPolicy,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub level: Option<f64>,
    #[serde(default)]
    pub chain: ChainSettings,
    #[serde(default = "default_chain_seed")]
    pub seed: u64,
}

fn default_margin() -> f64 {
    NiRule::default().margin
}

fn default_chain_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub label: String,
    pub outcome: Result<EstimateResult, String>,
}

impl AnalysisConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    fn kinds(&self) -> Result<Vec<EstimatorKind>, CliError> {
        let kinds = match &self.estimators {
            Some(ids) => ids
                .iter()
                .map(|id| {
                    EstimatorKind::from_id(id).ok_or_else(|| {
                        let valid: Vec<&str> = EstimatorKind::ALL.iter().map(|k| k.id()).collect();
                        CliError::Config(format!("estimators: unknown estimator '{id}', expected one of {}", valid.join(", ")))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => {
                let mut v = vec![EstimatorKind::Itt, EstimatorKind::PerProtocol, EstimatorKind::Ipw];
                if !self.instruments.is_empty() {
                    v.push(EstimatorKind::IvInteraction);
                }
                if !self.priors.is_empty() {
                    v.push(EstimatorKind::IvBayes);
                }
                v
            }
        };
        if kinds.contains(&EstimatorKind::IvInteraction) && self.instruments.is_empty() {
            return Err(CliError::Config("instruments: iv_interaction needs at least one instrument covariate".into()));
        }
        if kinds.contains(&EstimatorKind::IvBayes) && self.priors.is_empty() {
            return Err(CliError::Config("priors: iv_bayes needs at least one prior".into()));
        }
        for p in &self.priors {
            PriorSpec { mean: p.mean, sd: p.sd, vague_sd: p.vague_sd }
                .validate()
                .map_err(|e| CliError::Config(format!("priors.{}: {e}", p.label)))?;
        }
        Ok(kinds)
    }

    /// Every column the analysis reads besides y, z and c, in first-use order.
    fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        let wm = self.weight_model.iter().flatten();
        for c in self.covariates.iter().chain(wm).chain(&self.instruments) {
            if !cols.contains(c) {
                cols.push(c.clone());
            }
        }
        cols
    }
}

/// Reads an analysis CSV with header: `y`, `z`, `c` plus the named covariate
/// columns. Other columns are ignored.
pub fn read_dataset(text: &str, covariates: &[String]) -> Result<TrialDataset, CliError> {
    let bad = |m: String| CliError::Config(m);
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| bad(format!("data header: {e}")))?.clone();
    let find = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| bad(format!("data: required column '{name}' is missing")))
    };
    let (iy, iz, ic) = (find("y")?, find("z")?, find("c")?);
    let icov = covariates.iter().map(|c| find(c)).collect::<Result<Vec<_>, _>>()?;
    let (mut y, mut z, mut c) = (Vec::new(), Vec::new(), Vec::new());
    let mut cov: Vec<Vec<f64>> = vec![Vec::new(); covariates.len()];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(format!("data: {e}")))?;
        let line = r + 2;
        let real = |i: usize, name: &str| -> Result<f64, CliError> {
            let s = rec.get(i).unwrap_or("");
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(bad(format!("data line {line}: column '{name}' has '{s}', expected a number"))),
            }
        };
        let binary = |i: usize, name: &str| -> Result<u8, CliError> {
            match rec.get(i).unwrap_or("") {
                "0" => Ok(0),
                "1" => Ok(1),
                s => Err(bad(format!("data line {line}: column '{name}' has '{s}', expected 0 or 1"))),
            }
        };
        y.push(real(iy, "y")?);
        z.push(binary(iz, "z")?);
        c.push(binary(ic, "c")?);
        for (k, &i) in icov.iter().enumerate() {
            cov[k].push(real(i, &covariates[k])?);
        }
    }
    let covs = covariates.iter().cloned().zip(cov).map(|(name, values)| Covariate { name, values }).collect();
    TrialDataset::new(y, z, c, covs).map_err(|e| bad(format!("data: {e}")))
}

/// Applies the configured estimators to one dataset. Estimator failures are
/// kept per row.
pub fn analyze(d: &TrialDataset, cfg: &AnalysisConfigFile, rule: &NiRule) -> Result<Vec<AnalysisRow>, CliError> {
    let kinds = cfg.kinds()?;
    let base = AnalysisOptions {
        adjust: Some(cfg.covariates.clone()),
        weight_model: Some(cfg.weight_model.clone().unwrap_or_else(|| cfg.covariates.clone())),
        instrument: None,
        separation: cfg.separation,
    };
    let chain = ChainConfig { iterations: cfg.chain.iterations, burn_in: cfg.chain.burn_in, seed: cfg.seed };
    let token = |r: Result<EstimateResult, _>| r.map_err(|e: nitrial_core::estimators::EstimatorError| e.token().to_string());
    let mut rows = Vec::new();
    for kind in kinds {
        match kind {
            EstimatorKind::Itt => rows.push(AnalysisRow { label: "itt".into(), outcome: token(estimate_itt_with(d, &base, rule)) }),
            EstimatorKind::PerProtocol => {
                rows.push(AnalysisRow { label: "pp".into(), outcome: token(estimate_pp_with(d, &base, rule)) })
            }
            EstimatorKind::Ipw => rows.push(AnalysisRow { label: "ipw".into(), outcome: token(estimate_ipw_with(d, &base, rule)) }),
            EstimatorKind::IvInteraction => {
                for inst in &cfg.instruments {
                    let opts = AnalysisOptions { instrument: Some(inst.clone()), ..base.clone() };
                    rows.push(AnalysisRow {
                        label: format!("iv_interaction[{inst}]"),
                        outcome: token(estimate_iv_interaction_with(d, &opts, rule)),
                    });
                }
            }
            EstimatorKind::IvBayes => {
                for p in &cfg.priors {
                    let prior = PriorSpec { mean: p.mean, sd: p.sd, vague_sd: p.vague_sd };
                    rows.push(AnalysisRow {
                        label: format!("iv_bayes[{}]", p.label),
                        outcome: token(estimate_iv_bayes_with(d, &base, &prior, &chain, rule)),
                    });
                }
            }
        }
    }
    Ok(rows)
}

const HEADER: [&str; 11] = ["estimator", "point", "se", "lower", "upper", "level", "p_value", "ni", "n_used", "dropped", "error"];

fn fields(row: &AnalysisRow) -> Vec<String> {
    match &row.outcome {
        Ok(r) => vec![
            row.label.clone(),
            num(r.point),
            num(r.se),
            num(r.lower),
            num(r.upper),
            num(r.level),
            r.p_value().map(num).unwrap_or_else(|| "-".into()),
            (r.ni as u8).to_string(),
            r.diagnostics.n_used.to_string(),
            r.diagnostics.dropped.to_string(),
            String::new(),
        ],
        Err(t) => {
            let mut v = vec![row.label.clone()];
            v.extend(std::iter::repeat_n(String::new(), 9));
            v.push(t.clone());
            v
        }
    }
}

pub fn results_csv(rows: &[AnalysisRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(fields(r)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Fixed-width text table for the terminal.
pub fn results_text(rows: &[AnalysisRow]) -> String {
    let short = |s: &str| match s.parse::<f64>() {
        Ok(v) if s.contains('.') || s.contains('e') => format!("{v:.4}"),
        _ => s.to_string(),
    };
    let mut table: Vec<Vec<String>> = vec![HEADER.iter().map(|s| s.to_string()).collect()];
    for r in rows {
        let mut f = fields(r);
        for cell in f.iter_mut().skip(1).take(6) {
            *cell = short(cell);
        }
        table.push(f);
    }
    let widths: Vec<usize> = (0..HEADER.len()).map(|j| table.iter().map(|r| r[j].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in &table {
        let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub struct AnalysisOutput {
    pub rows: Vec<AnalysisRow>,
    pub table: String,
}

impl AnalysisOutput {
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| r.outcome.is_err())
    }
}

/// Runs `analyze` and writes the results CSV to `out`.
pub fn cmd_analyze(data_path: &Path, config_path: &Path, level: Option<f64>, out: &Path) -> Result<AnalysisOutput, CliError> {
    let cfg = AnalysisConfigFile::parse(&read_text(config_path)?)?;
    let (alpha, level) = match level {
        Some(l) => (None, Some(l)),
        None => (cfg.alpha, cfg.level),
    };
    let rule = resolve_rule(cfg.margin, alpha, level)?;
    cfg.kinds()?;
    let d = read_dataset(&read_text(data_path)?, &cfg.columns())?;
    let rows = analyze(&d, &cfg, &rule)?;
    write_atomic(out, &results_csv(&rows))?;
    let table = results_text(&rows);
    Ok(AnalysisOutput { rows, table })
}
