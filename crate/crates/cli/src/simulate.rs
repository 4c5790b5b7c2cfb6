use std::path::Path;

use nitrial_core::dgp::{catalog, catalog_entries, sample_dataset};
use nitrial_core::mcharness::{replication_index, run_study, summary_json, write_results_csv};
use nitrial_core::numkernel::derive_stream;

use crate::config::StudyConfigFile;
use crate::{num, read_text, write_atomic, CliError};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ECHO_FILE: &str = "config_echo.json";

/// Runs the configured study and writes results, summary and config echo
/// into the output directory. `level` overrides the configured interval
/// level; `threads` the thread budget.
pub fn cmd_simulate(
    config_path: &Path,
    level: Option<f64>,
    threads: Option<usize>,
) -> Result<std::path::PathBuf, CliError> {
    let mut file = StudyConfigFile::parse(&read_text(config_path)?)?;
    if let Some(l) = level {
        file.level = Some(l);
        file.alpha = None;
    }
    let (cfg, echo) = file.resolve(threads)?;
    let out = run_study(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut csv = Vec::new();
    write_results_csv(&out.rows, &mut csv).map_err(|e| CliError::Runtime(e.to_string()))?;
    let summary = summary_json(&cfg, &out.summaries);
    let json = |v: &serde_json::Value| serde_json::to_string_pretty(v).expect("json value serializes") + "\n";
    let echo_text = serde_json::to_string_pretty(&echo).expect("config serializes") + "\n";

    let dir = &echo.output_dir;
    write_atomic(&dir.join(RESULTS_FILE), &csv)?;
    write_atomic(&dir.join(SUMMARY_FILE), json(&summary).as_bytes())?;
    write_atomic(&dir.join(ECHO_FILE), echo_text.as_bytes())?;
    Ok(dir.clone())
}

/// The frozen catalog (spec, digest and analytic truth per scenario) as JSON.
pub fn cmd_dump_catalog() -> String {
    serde_json::to_string_pretty(&catalog_entries()).expect("catalog serializes") + "\n"
}

/// One simulated dataset as analysis CSV (`y,z,c,x`; the latent u is left
/// out), drawn exactly as replication `rep` of a study with `master_seed`.
pub fn dump_sample(id: &str, master_seed: u64, rep: usize) -> Result<String, CliError> {
    let spec = catalog(id).map_err(|e| CliError::Config(e.to_string()))?;
    let stream = derive_stream(master_seed, replication_index(id, rep));
    let d = sample_dataset(&spec, stream).map_err(|e| CliError::Runtime(e.to_string()))?.observed();
    let x = d.covariate("x").expect("catalog datasets carry x");
    let mut out = String::from("y,z,c,x\n");
    for i in 0..d.n() {
        out.push_str(&format!("{},{},{},{}\n", num(d.y()[i]), d.z()[i], d.c()[i], num(x[i])));
    }
    Ok(out)
}
