use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nitrial_cli::read_dataset;
use nitrial_core::dgp::{catalog, sample_dataset};
use nitrial_core::estimators::{
    estimate_ipw_with, estimate_itt_with, estimate_iv_interaction_with, estimate_pp_with, AnalysisOptions, NiRule,
};
use nitrial_core::mcharness::replication_index;
use nitrial_core::numkernel::derive_stream;
use serde_json::Value;

fn nitrial(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nitrial")).current_dir(dir).args(args).env_remove("NITRIAL_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

const MINIMAL: &str = r#"{"scenarios": ["A-1"], "nsim": 2, "estimators": [{"id": "itt"}], "output_dir": "out"}"#;

#[test]
fn minimal_simulate_writes_two_rows_and_one_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.json", MINIMAL);
    let o = nitrial(tmp.path(), &["simulate", "c.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = read(tmp.path().join("out/results.csv"));
    assert_eq!(csv.lines().count(), 3);
    let summary: Value = serde_json::from_str(&read(tmp.path().join("out/summary.json"))).unwrap();
    let scen = summary["scenarios"].as_object().unwrap();
    assert_eq!(scen.len(), 1);
    assert!(scen["A-1"]["estimators"]["itt"]["bias"].is_number());
}

#[test]
fn simulate_is_byte_reproducible_and_the_echo_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"scenarios": ["A-2b", "TEH(U)-8"], "nsim": 6,
        "estimators": [{"id": "itt"}, {"id": "pp"}, {"id": "ipw"}, {"id": "iv_interaction"}],
        "output_dir": "out"}"#;
    write(tmp.path(), "c.json", cfg);
    assert_eq!(code(&nitrial(tmp.path(), &["simulate", "c.json"])), 0);
    let first = (read(tmp.path().join("out/results.csv")), read(tmp.path().join("out/summary.json")));

    assert_eq!(code(&nitrial(tmp.path(), &["simulate", "c.json", "--threads", "3"])), 0);
    let second = (read(tmp.path().join("out/results.csv")), read(tmp.path().join("out/summary.json")));
    assert_eq!(first, second);

    let mut echo: Value = serde_json::from_str(&read(tmp.path().join("out/config_echo.json"))).unwrap();
    echo["output_dir"] = "replay".into();
    write(tmp.path(), "echo.json", &echo.to_string());
    let o = nitrial(tmp.path(), &["simulate", "echo.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read(tmp.path().join("replay/results.csv")), first.0);
}

#[test]
fn threads_come_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.json", MINIMAL);
    let o = Command::new(env!("CARGO_BIN_EXE_nitrial"))
        .current_dir(tmp.path())
        .args(["simulate", "c.json"])
        .env("NITRIAL_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let echo: Value = serde_json::from_str(&read(tmp.path().join("out/config_echo.json"))).unwrap();
    assert_eq!(echo["threads"], 2);
}

#[test]
fn config_errors_exit_2_and_name_the_problem() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "a.json", r#"{"scenarios": ["A-1"], "estimators": [{"id": "ivregress"}]}"#);
    let o = nitrial(tmp.path(), &["simulate", "a.json"]);
    assert_eq!(code(&o), 2);
    for id in ["itt", "pp", "ipw", "iv_interaction", "iv_bayes"] {
        assert!(stderr(&o).contains(id), "{}", stderr(&o));
    }

    write(tmp.path(), "b.json", r#"{"scenarios": ["A-1"], "nsimm": 3}"#);
    let o = nitrial(tmp.path(), &["simulate", "b.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nsimm"));

    write(tmp.path(), "c.json", r#"{"scenarios": ["Z-9"]}"#);
    assert_eq!(code(&nitrial(tmp.path(), &["simulate", "c.json"])), 2);
    assert_eq!(code(&nitrial(tmp.path(), &["simulate", "missing.json"])), 2);
    write(tmp.path(), "d.json", r#"{"scenarios": ["A-1"], "nsim": 1}"#);
    assert_eq!(code(&nitrial(tmp.path(), &["simulate", "d.json"])), 2);
}

/// Full compliance, effect 0.5, small deterministic noise, binary x.
fn full_compliance_csv() -> String {
    let mut s = String::from("y,z,c,x\n");
    for i in 0..400 {
        let z = i % 2;
        let x = (i / 2) % 2;
        let y = 0.5 * z as f64 + 0.2 * x as f64 + 0.1 * ((i as f64) * 1.7).sin();
        s.push_str(&format!("{y},{z},1,{x}\n"));
    }
    s
}

#[test]
fn analyze_full_compliance() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "d.csv", &full_compliance_csv());
    write(tmp.path(), "a.json", r#"{"covariates": ["x"], "instruments": ["x"]}"#);
    let o = nitrial(tmp.path(), &["analyze", "d.csv", "a.json", "--out", "res.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("itt"));
    let mut rdr = csv::Reader::from_path(tmp.path().join("res.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows[..3] {
        let p: f64 = r[1].parse().unwrap();
        assert!((p - 0.5).abs() < 0.03, "{} {p}", &r[0]);
    }
    assert_eq!(&rows[3][0], "iv_interaction[x]");
    assert_eq!(&rows[3][10], "weak_or_collinear_instruments");
}

#[test]
fn analyze_default_output_path() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "d.csv", &full_compliance_csv());
    write(tmp.path(), "a.json", "{}");
    assert_eq!(code(&nitrial(tmp.path(), &["analyze", "d.csv", "a.json"])), 0);
    assert!(tmp.path().join("analysis_results.csv").exists());
}

fn sample_to(dir: &Path, id: &str, rep: &str) {
    let o = nitrial(dir, &["dump-catalog", "--sample", id, "--seed", "11", "--rep", rep, "--out", "d.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn analyze_prior_and_instrument_rows() {
    let tmp = tempfile::tempdir().unwrap();
    sample_to(tmp.path(), "A-2b", "0");
    let data = read(tmp.path().join("d.csv"));
    // Extra instrument columns: x itself, its complement, and two functions of it.
    let mut aug = String::from("y,z,c,x,nx,x2,sx\n");
    for line in data.lines().skip(1) {
        let x: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        aug.push_str(&format!("{line},{},{},{}\n", 1.0 - x, 2.0 * x, x - 0.5));
    }
    write(tmp.path(), "d.csv", &aug);
    write(
        tmp.path(),
        "a.json",
        r#"{"instruments": ["x", "nx", "x2", "sx"],
            "priors": [
              {"label": "large", "mean": -0.3, "sd": 0.5},
              {"label": "precise", "mean": -0.3, "sd": 0.05},
              {"label": "small", "mean": 0.0, "sd": 0.1},
              {"label": "miscentred", "mean": 0.3, "sd": 0.05}],
            "chain": {"iterations": 2000, "burn_in": 200}}"#,
    );
    let o = nitrial(tmp.path(), &["analyze", "d.csv", "a.json", "--out", "res.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(tmp.path().join("res.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let iv: Vec<_> = rows.iter().filter(|r| r[0].starts_with("iv_interaction[")).collect();
    let bayes: Vec<_> = rows.iter().filter(|r| r[0].starts_with("iv_bayes[")).collect();
    assert_eq!(iv.len(), 4);
    assert_eq!(bayes.len(), 4);
    assert!(bayes.iter().all(|r| &r[6] == "-" && r[10].is_empty()));
    assert!(iv.iter().all(|r| r[6].parse::<f64>().is_ok()));
    // The four instruments span the same space, so the estimates agree.
    let p0: f64 = iv[0][1].parse().unwrap();
    for r in &iv {
        assert!((r[1].parse::<f64>().unwrap() - p0).abs() < 1e-8);
    }
}

#[test]
fn analyze_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "a.json", r#"{"covariates": ["x"]}"#);

    write(tmp.path(), "nox.csv", "y,z,c\n1,0,1\n2,1,1\n");
    let o = nitrial(tmp.path(), &["analyze", "nox.csv", "a.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("'x'"), "{}", stderr(&o));

    write(tmp.path(), "badz.csv", "y,z,c,x\n1,0,1,0\n2,2,1,1\n");
    let o = nitrial(tmp.path(), &["analyze", "badz.csv", "a.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    write(tmp.path(), "d.csv", &full_compliance_csv());
    write(tmp.path(), "iv.json", r#"{"estimators": ["iv_interaction"], "instruments": ["x"]}"#);
    let o = nitrial(tmp.path(), &["analyze", "d.csv", "iv.json"]);
    assert_eq!(code(&o), 4);
    assert!(stdout(&o).contains("weak_or_collinear_instruments"));

    write(tmp.path(), "nopr.json", r#"{"estimators": ["iv_bayes"]}"#);
    assert_eq!(code(&nitrial(tmp.path(), &["analyze", "d.csv", "nopr.json"])), 2);
}

#[test]
fn advise_prints_the_recommendation() {
    let tmp = tempfile::tempdir().unwrap();
    let none = stdout(&nitrial(tmp.path(), &["advise", "--trial-specific-ies", "none"]));
    let ident = stdout(&nitrial(tmp.path(), &["advise", "--trial-specific-ies", "identifiable"]));
    let unid = stdout(&nitrial(tmp.path(), &["advise", "--trial-specific-ies", "unidentifiable"]));
    assert!(none.starts_with("Primary:"));
    assert!(!none.contains("Secondary:"));
    assert_ne!(none, ident);
    assert_ne!(ident, unid);
    assert!(unid.contains("Secondary:"));
    assert_eq!(code(&nitrial(tmp.path(), &["advise", "--trial-specific-ies", "sometimes"])), 2);
}

/// Cells of the markdown table under `## metric`, keyed by (scenario, estimator).
fn md_table(md: &str, metric: &str) -> Vec<(String, String, String)> {
    let start = md.find(&format!("## {metric}\n")).unwrap();
    let lines: Vec<&str> =
        md[start..].lines().skip(1).skip_while(|l| !l.starts_with('|')).take_while(|l| l.starts_with('|')).collect();
    let split = |l: &str| l.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect::<Vec<_>>();
    let header = split(lines[0]);
    let mut out = Vec::new();
    for l in &lines[2..] {
        let cells = split(l);
        for (j, est) in header.iter().enumerate().skip(1) {
            out.push((cells[0].clone(), est.clone(), cells[j].clone()));
        }
    }
    out
}

#[test]
fn report_md_carries_the_summary_values() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.json",
        r#"{"scenarios": ["A-1", "C-2a"], "nsim": 4,
            "estimators": [{"id": "itt"}, {"id": "pp"}, {"id": "ipw"}], "output_dir": "out"}"#,
    );
    assert_eq!(code(&nitrial(tmp.path(), &["simulate", "c.json"])), 0);
    let summary: Value = serde_json::from_str(&read(tmp.path().join("out/summary.json"))).unwrap();
    let o = nitrial(tmp.path(), &["report", "out", "--format", "md"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let md = stdout(&o);
    let cells = md_table(&md, "bias");
    assert_eq!(cells.len(), 6);
    for (scen, est, v) in cells {
        let json = summary["scenarios"][&scen]["estimators"][&est]["bias"].as_f64().unwrap();
        assert_eq!(v.parse::<f64>().unwrap(), json, "{scen}/{est}");
    }

    let o = nitrial(tmp.path(), &["report", "out", "--format", "csv", "--out", "r.csv"]);
    assert_eq!(code(&o), 0);
    let csv = read(tmp.path().join("r.csv"));
    assert!(csv.starts_with("metric,scenario,itt,pp,ipw\n"));
    assert!(csv.lines().any(|l| l.starts_with("dropped_rate,C-2a,")));

    assert_eq!(code(&nitrial(tmp.path(), &["report", "nowhere"])), 2);
}

#[test]
fn report_rejects_a_foreign_summary() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir(tmp.path().join("s")).unwrap();
    write(tmp.path(), "s/summary.json", r#"{"format_version": 99, "scenarios": {}}"#);
    let o = nitrial(tmp.path(), &["report", "s"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("format_version"));
}

#[test]
fn dump_catalog_lists_every_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nitrial(tmp.path(), &["dump-catalog"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 48);
    assert_eq!(code(&nitrial(tmp.path(), &["dump-catalog", "--sample", "Q-1"])), 2);
}

#[test]
fn analyze_on_a_dumped_sample_matches_library_calls() {
    let tmp = tempfile::tempdir().unwrap();
    sample_to(tmp.path(), "A-3b", "3");
    write(tmp.path(), "a.json", r#"{"covariates": ["x"], "instruments": ["x"]}"#);
    let o = nitrial(tmp.path(), &["analyze", "d.csv", "a.json", "--out", "res.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let spec = catalog("A-3b").unwrap();
    let d = sample_dataset(&spec, derive_stream(11, replication_index("A-3b", 3))).unwrap().observed();
    let parsed = read_dataset(&read(tmp.path().join("d.csv")), &["x".to_string()]).unwrap();
    assert_eq!(parsed.y(), d.y());
    assert_eq!(parsed.z(), d.z());
    assert_eq!(parsed.c(), d.c());

    let rule = NiRule::default();
    let opts = AnalysisOptions { adjust: Some(vec!["x".into()]), weight_model: Some(vec!["x".into()]), ..Default::default() };
    let iv = AnalysisOptions { instrument: Some("x".into()), ..opts.clone() };
    let expect = [
        estimate_itt_with(&d, &opts, &rule).unwrap(),
        estimate_pp_with(&d, &opts, &rule).unwrap(),
        estimate_ipw_with(&d, &opts, &rule).unwrap(),
        estimate_iv_interaction_with(&d, &iv, &rule).unwrap(),
    ];
    let mut rdr = csv::Reader::from_path(tmp.path().join("res.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for (r, e) in rows.iter().zip(&expect) {
        assert_eq!(r[1].parse::<f64>().unwrap(), e.point, "{}", &r[0]);
        assert_eq!(r[2].parse::<f64>().unwrap(), e.se, "{}", &r[0]);
        assert_eq!(r[3].parse::<f64>().unwrap(), e.lower, "{}", &r[0]);
        assert_eq!(r[4].parse::<f64>().unwrap(), e.upper, "{}", &r[0]);
        assert_eq!(&r[7], if e.ni { "1" } else { "0" });
    }
}

#[test]
fn level_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "d.csv", &full_compliance_csv());
    write(tmp.path(), "a.json", r#"{"estimators": ["itt"], "alpha": 0.025}"#);
    assert_eq!(code(&nitrial(tmp.path(), &["analyze", "d.csv", "a.json", "--level", "0.9", "--out", "r.csv"])), 0);
    let mut rdr = csv::Reader::from_path(tmp.path().join("r.csv")).unwrap();
    let row = rdr.records().next().unwrap().unwrap();
    assert!((row[5].parse::<f64>().unwrap() - 0.9).abs() < 1e-12);
}
