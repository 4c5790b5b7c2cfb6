use std::path::Path;

use nitrial_core::mcharness::{EstimatorMetrics, FORMAT_VERSION};
use serde_json::Value;

use crate::simulate::SUMMARY_FILE;
use crate::{num, read_text, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Md,
}

type Getter = fn(&EstimatorMetrics) -> Option<f64>;

/// One table per metric, in this order.
const METRICS: [(&str, &str, Getter); 11] = [
    ("bias", "mean point minus truth", |m| m.bias),
    ("bias_mcse", "Monte-Carlo SE of the bias", |m| m.bias_mcse),
    ("ni_rate", "share declaring non-inferiority (type I error when truth = margin, power otherwise)", |m| m.ni_rate),
    ("ni_rate_mcse", "Monte-Carlo SE of the ni rate", |m| m.ni_rate_mcse),
    ("emp_se", "empirical SE", |m| m.emp_se),
    ("rel_se_error", "100 x (mean model SE / empirical SE - 1)", |m| m.rel_se_error),
    ("precision_vs_itt", "100 x ((empSE / empSE of ITT)^2 - 1)", |m| m.precision_vs_itt),
    ("failed", "replications where the estimator errored", |m| Some(m.failed as f64)),
    ("filtered", "IV(interaction) replications removed by the outlier filter", |m| Some(m.filtered as f64)),
    ("used", "replications entering the metrics", |m| Some(m.used as f64)),
    ("dropped_rate", "IPW observations dropped for perfect prediction", |m| Some(m.dropped_rate)),
];

struct Parsed {
    estimators: Vec<String>,
    scenarios: Vec<(String, Vec<(String, EstimatorMetrics)>)>,
}

fn parse(text: &str) -> Result<Parsed, CliError> {
    let bad = |m: String| CliError::Config(format!("summary: {m}"));
    let v: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    match v.get("format_version").and_then(Value::as_u64) {
        Some(f) if f == FORMAT_VERSION as u64 => {}
        other => return Err(bad(format!("format_version {other:?} is not {FORMAT_VERSION}"))),
    }
    let scen = v.get("scenarios").and_then(Value::as_object).ok_or_else(|| bad("no scenarios object".into()))?;
    let mut estimators: Vec<String> = Vec::new();
    let mut scenarios = Vec::new();
    for (label, s) in scen {
        let est = s
            .get("estimators")
            .and_then(Value::as_object)
            .ok_or_else(|| bad(format!("scenario '{label}' has no estimators")))?;
        let mut list = Vec::new();
        for (name, m) in est {
            let metrics: EstimatorMetrics =
                serde_json::from_value(m.clone()).map_err(|e| bad(format!("{label}/{name}: {e}")))?;
            if !estimators.contains(name) {
                estimators.push(name.clone());
            }
            list.push((name.clone(), metrics));
        }
        scenarios.push((label.clone(), list));
    }
    Ok(Parsed { estimators, scenarios })
}

fn cell(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "NA".into())
}

fn lookup<'a>(list: &'a [(String, EstimatorMetrics)], name: &str) -> Option<&'a EstimatorMetrics> {
    list.iter().find(|(n, _)| n == name).map(|(_, m)| m)
}

fn render(p: &Parsed, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Md => {
            for (i, (name, what, get)) in METRICS.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                out.push_str(&format!("## {name}\n\n{what}\n\n"));
                out.push_str(&format!("| scenario | {} |\n", p.estimators.join(" | ")));
                out.push_str(&format!("|---|{}\n", "---|".repeat(p.estimators.len())));
                for (label, list) in &p.scenarios {
                    let cells: Vec<String> =
                        p.estimators.iter().map(|e| lookup(list, e).map_or("NA".into(), |m| cell(get(m)))).collect();
                    out.push_str(&format!("| {label} | {} |\n", cells.join(" | ")));
                }
            }
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["metric".to_string(), "scenario".to_string()];
            header.extend(p.estimators.iter().cloned());
            w.write_record(&header).expect("in-memory write");
            for (name, _, get) in METRICS {
                for (label, list) in &p.scenarios {
                    let mut rec = vec![name.to_string(), label.clone()];
                    rec.extend(p.estimators.iter().map(|e| lookup(list, e).map_or("NA".into(), |m| cell(get(m)))));
                    w.write_record(&rec).expect("in-memory write");
                }
            }
            out = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        }
    }
    out
}

/// Renders the summary in `dir` as per-metric tables.
pub fn cmd_report(dir: &Path, format: ReportFormat) -> Result<String, CliError> {
    let text = read_text(&dir.join(SUMMARY_FILE))?;
    Ok(render(&parse(&text)?, format))
}
