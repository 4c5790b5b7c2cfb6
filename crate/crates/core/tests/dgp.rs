use nitrial_core::dgp::*;
use nitrial_core::numkernel::derive_stream;
use serde::{Deserialize, Serialize};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/catalog_freeze.json");
const FREEZE_SEED: u64 = 20240101;
const FREEZE_DRAWS: usize = 10_000_000;

#[derive(Debug, Serialize, Deserialize)]
struct Frozen {
    label: String,
    digest: String,
    truth: f64,
    brute_force: f64,
    brute_force_se: f64,
    draws: usize,
}

fn load_fixture() -> Vec<Frozen> {
    serde_json::from_str(&std::fs::read_to_string(FIXTURE).expect("fixture present")).unwrap()
}

#[test]
fn cell_compliance_matches_the_logit_model() {
    let mut spec = catalog("A-3b").unwrap();
    spec.n = 1_000_000;
    let d = sample_dataset(&spec, derive_stream(1, 1)).unwrap();
    let x = d.covariate("x").unwrap();
    let u = d.latent().unwrap();
    for cell in spec.cells() {
        let rows: Vec<usize> = (0..d.n())
            .filter(|&i| d.z()[i] == cell.z && x[i] as u8 == cell.x && u[i] == cell.u)
            .collect();
        let rate = rows.iter().filter(|&&i| d.c()[i] == 1).count() as f64 / rows.len() as f64;
        let se = (cell.compliance * (1.0 - cell.compliance) / rows.len() as f64).sqrt();
        assert!((rate - cell.compliance).abs() < 4.0 * se, "{cell:?}: {rate}");
        // Each cell holds about weight / 2 of the sample.
        let share = rows.len() as f64 / d.n() as f64;
        let share_se = (0.5 * cell.weight * (1.0 - 0.5 * cell.weight) / d.n() as f64).sqrt();
        assert!((share - 0.5 * cell.weight).abs() < 4.0 * share_se);
    }
}

#[test]
fn arm_moments_match_the_analytic_values() {
    for id in ["A-2c", "TEH(U)-8"] {
        let mut spec = catalog(id).unwrap();
        spec.n = 400_000;
        let d = sample_dataset(&spec, derive_stream(2, 2)).unwrap();
        for arm in [0u8, 1] {
            let y: Vec<f64> = (0..d.n()).filter(|&i| d.z()[i] == arm).map(|i| d.y()[i]).collect();
            let m = y.len() as f64;
            let mean = y.iter().sum::<f64>() / m;
            let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let m4 = y.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / m;
            let mean_se = (var / m).sqrt();
            let var_se = ((m4 - var * var) / m).sqrt();
            assert!((mean - spec.expected_arm_mean(arm)).abs() < 4.0 * mean_se, "{id} arm {arm} mean");
            assert!((var - spec.expected_arm_variance(arm)).abs() < 4.0 * var_se, "{id} arm {arm} var");
        }
    }
}

#[test]
fn sampling_is_a_function_of_the_stream() {
    let spec = catalog("B-4b").unwrap();
    let a = sample_dataset(&spec, derive_stream(7, 3)).unwrap();
    let b = sample_dataset(&spec, derive_stream(7, 3)).unwrap();
    let c = sample_dataset(&spec, derive_stream(7, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.y(), c.y());
    assert_eq!(a.n(), 200);
    assert!(a.observed().latent().is_none());
    assert!(a.latent().is_some());
}

#[test]
fn unequal_and_equal_arm_mechanisms_hit_their_targets() {
    for series in SIM1_SERIES {
        let overall = if series == "C" { 0.9 } else { 0.7 };
        let gap = ARM_GAP.min(1.0 - overall);
        for m in SIM1_MECHANISMS {
            let t = true_estimand(&catalog(&format!("{series}-{m}")).unwrap());
            let (p0, p1) = if m.ends_with('a') || m.ends_with('c') {
                (overall - gap / 2.0, overall + gap / 2.0)
            } else {
                (overall, overall)
            };
            assert!((t.p0 - p0).abs() < 1e-9 && (t.p1 - p1).abs() < 1e-9, "{series}-{m}: {} {}", t.p0, t.p1);
        }
    }
    let b = true_estimand(&catalog("A-2b").unwrap());
    assert!((b.p0 - b.p1).abs() < 1e-9);
}

#[test]
fn mechanism_slopes_follow_their_pattern() {
    let c = |id: &str| catalog(id).unwrap().compliance;
    let one = c("A-1");
    assert_eq!((one.gx, one.gu, one.gzx, one.gzu, one.gz), (0.0, 0.0, 0.0, 0.0, 0.0));
    let a4 = c("A-4a");
    assert_eq!((a4.gx, a4.gzx, a4.gzu), (0.0, 0.0, 0.0));
    assert_eq!(a4.gu, -COMPLIANCE_SLOPE);
    let a2 = c("A-2a");
    assert_eq!((a2.gu, a2.gzx, a2.gzu), (0.0, 0.0, 0.0));
    for id in ["A-2b", "A-2c"] {
        let m = c(id);
        assert_eq!((m.gx, m.gzx, m.gu, m.gzu), (-COMPLIANCE_SLOPE, INTERACTION_SHIFT, 0.0, 0.0));
    }
    let b3 = c("A-3b");
    assert_eq!((b3.gzx, b3.gzu), (INTERACTION_SHIFT, INTERACTION_SHIFT));
    let b4 = c("A-4b");
    assert_eq!((b4.gx, b4.gzx, b4.gzu), (0.0, 0.0, INTERACTION_SHIFT));
}

#[test]
fn every_scenario_targets_the_margin_or_zero() {
    for spec in full_catalog() {
        let t = true_estimand(&spec);
        let target = if spec.label.starts_with("D-") { 0.0 } else { MARGIN_TRUTH };
        assert!((t.delta - target).abs() < 1e-12, "{}: {}", spec.label, t.delta);
        for cell in &t.cells {
            assert!(cell.compliance > 0.05 && cell.compliance < 0.999, "{} {cell:?}", spec.label);
        }
    }
}

#[test]
fn heterogeneity_only_in_the_second_study() {
    for spec in full_catalog() {
        let o = spec.outcome;
        match spec.study {
            Study::Constant => assert_eq!((o.tau_x, o.tau_u), (0.0, 0.0)),
            Study::Heterogeneous => {
                let on_x = spec.label.starts_with("TEH(X)");
                assert_eq!(on_x, o.tau_x != 0.0);
                assert_eq!(!on_x, o.tau_u != 0.0);
            }
        }
    }
    let t = |id: &str| catalog(id).unwrap().outcome;
    assert_eq!(t("TEH(X)-1").tau_x, 0.5);
    assert_eq!(t("TEH(X)-2").tau_x, 1.0);
    assert_eq!(t("TEH(U)-8").tau_u, 1.0);
    let p = |id: &str| true_estimand(&catalog(id).unwrap());
    assert!((p("TEH(X)-3").p0 - 0.85).abs() < 1e-9 && (p("TEH(X)-3").p1 - 0.55).abs() < 1e-9);
    assert!((p("TEH(U)-5").p0 - 0.75).abs() < 1e-9 && (p("TEH(U)-5").p1 - 0.65).abs() < 1e-9);
}

#[test]
fn validation_rejects_bad_specs() {
    let base = catalog("A-1").unwrap();
    let mut odd = base.clone();
    odd.n = 1001;
    assert!(odd.validate().is_err());
    let mut small = base.clone();
    small.n = 10;
    assert!(small.validate().is_err());
    let mut p = base.clone();
    p.p_x = 1.0;
    assert!(p.validate().is_err());
    let mut s = base.clone();
    s.outcome.sigma = -1.0;
    assert!(s.validate().is_err());
    let mut teh = base.clone();
    teh.outcome.tau_u = 0.3;
    assert!(teh.validate().is_err());
    let mut both = catalog("TEH(X)-1").unwrap();
    both.outcome.tau_u = 0.3;
    assert!(both.validate().is_err());
    let mut nan = base;
    nan.compliance.gz = f64::NAN;
    assert!(nan.validate().is_err());
}

#[test]
fn spec_json_round_trips_and_rejects_unknown_keys() {
    let spec = catalog("E-3a").unwrap();
    let json = serde_json::to_string(&spec).unwrap();
    let back: ScenarioSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(back, spec);
    assert_eq!(back.digest(), spec.digest());
    let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
    v["extra"] = serde_json::json!(1);
    assert!(serde_json::from_value::<ScenarioSpec>(v).is_err());
}

#[test]
fn intercept_solver_hits_the_target_rate() {
    for (target, sx, su) in [(0.7, -1.5, 0.0), (0.95, 1.0, -1.5), (0.1, 2.5, 2.5)] {
        let a = solve_intercept(target, 0.3, 0.6, sx, su);
        let mut rate = 0.0;
        for (x, wx) in [(0.0, 0.7), (1.0, 0.3)] {
            for (u, wu) in [(0.0, 0.4), (1.0, 0.6)] {
                rate += wx * wu / (1.0 + f64::exp(-(a + sx * x + su * u)));
            }
        }
        assert!((rate - target).abs() < 1e-12);
    }
}

#[test]
fn frozen_catalog_matches_the_fixture() {
    let frozen = load_fixture();
    let live = catalog_entries();
    assert_eq!(frozen.len(), live.len());
    for (f, e) in frozen.iter().zip(&live) {
        assert_eq!(f.label, e.spec.label);
        assert_eq!(f.digest, e.digest, "{} changed since the catalog was frozen", f.label);
        assert_eq!(f.truth, e.truth.delta);
        assert_eq!(f.draws, FREEZE_DRAWS);
        assert!((f.truth - f.brute_force).abs() < 4.0 * f.brute_force_se, "{}", f.label);
    }
}

#[test]
fn brute_force_is_reproducible_at_small_scale() {
    let spec = catalog("TEH(U)-6").unwrap();
    let a = brute_force_estimand(&spec, 100_000, derive_stream(4, 4));
    let b = brute_force_estimand(&spec, 100_000, derive_stream(4, 4));
    assert_eq!(a, b);
    assert!((a.0 - true_estimand(&spec).delta).abs() < 4.0 * a.1);
}

/// Regenerates the freeze fixture; run once when the catalog changes:
/// `cargo test -p nitrial-core --test dgp -- --ignored write_catalog_fixture`.
#[test]
#[ignore]
fn write_catalog_fixture() {
    let out: Vec<Frozen> = catalog_entries()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let (m, se) = brute_force_estimand(&e.spec, FREEZE_DRAWS, derive_stream(FREEZE_SEED, i as u64));
            Frozen {
                label: e.spec.label.clone(),
                digest: e.digest.clone(),
                truth: e.truth.delta,
                brute_force: m,
                brute_force_se: se,
                draws: FREEZE_DRAWS,
            }
        })
        .collect();
    std::fs::create_dir_all(std::path::Path::new(FIXTURE).parent().unwrap()).unwrap();
    std::fs::write(FIXTURE, serde_json::to_string_pretty(&out).unwrap() + "\n").unwrap();
}
