use approx::assert_relative_eq;
use cliquelab::harness::*;
use cliquelab::typical::typical_clique_number;
use cliquelab::{ExperimentConfig, ScalingSchedule as S, WeightDistribution as D};

fn er_config(n_values: Vec<u64>, trials: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(D::Degenerate { value: 1.0 }, S::Constant { value: 2f64.sqrt() }, n_values);
    cfg.trials = trials;
    cfg.master_seed = seed;
    cfg
}

fn csv_bytes(report: &ExperimentReport) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(report, &mut buf).unwrap();
    buf
}

#[test]
fn seeds_follow_splitmix() {
    assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    assert_eq!(trial_seed(7, 64, 3), splitmix64(splitmix64(splitmix64(7) ^ 64) ^ 3));
    assert_ne!(trial_seed(7, 64, 3), trial_seed(7, 64, 4));
    assert_ne!(trial_seed(7, 64, 3), trial_seed(7, 65, 3));
}

#[test]
fn experiment_is_deterministic() {
    let cfg = er_config(vec![24, 40], 12, 99);
    let a = run_concentration_experiment(&cfg).unwrap();
    let b = run_concentration_experiment(&cfg).unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    let mut other = cfg.clone();
    other.master_seed = 100;
    assert_ne!(csv_bytes(&a), csv_bytes(&run_concentration_experiment(&other).unwrap()));
}

#[test]
fn explicit_thread_count_gives_same_aggregates() {
    let cfg = er_config(vec![48], 16, 5);
    let mut single = cfg.clone();
    single.threads = Some(1);
    let a = run_concentration_experiment(&cfg).unwrap();
    let b = run_concentration_experiment(&single).unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    assert_eq!(a.records[0].hit_rate, b.records[0].hit_rate);
}

#[test]
fn json_round_trip_is_exact() {
    let cfg = er_config(vec![30], 7, 3);
    let report = run_concentration_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    export_report(&report, ExportFormat::Json, &path).unwrap();
    let back = read_json_report(&path).unwrap();
    assert_eq!(back.records[0].hit_rate.unwrap().to_bits(), report.records[0].hit_rate.unwrap().to_bits());
    assert_eq!(back.records[0].omega_bar.to_bits(), report.records[0].omega_bar.to_bits());
    assert_eq!(back.records[0].trials, report.records[0].trials);
    assert_eq!(back.dist, report.dist);
}

#[test]
fn csv_layout() {
    let cfg = er_config(vec![20], 2, 1);
    let empty = csv_bytes(&ExperimentReport::empty(&cfg));
    assert_eq!(String::from_utf8(empty).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
    let report = run_concentration_experiment(&cfg).unwrap();
    let text = String::from_utf8(csv_bytes(&report)).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), CSV_HEADER.len());
    assert_eq!(fields[0], "degenerate(1)");
    assert_eq!(fields[2], "20");
    assert_eq!(fields[5], format_sig12(report.records[0].omega_bar));
    assert_eq!(fields[9], trial_seed(1, 20, 0).to_string());
    assert!(fields[11] == "true" || fields[11] == "false");
}

#[test]
fn budget_exhaustion_is_censoring() {
    let mut cfg = er_config(vec![40], 4, 2);
    cfg.node_budget = 1;
    let report = run_concentration_experiment(&cfg).unwrap();
    let rec = &report.records[0];
    assert_eq!(rec.censored, 4);
    assert!(rec.budget_censored);
    assert_eq!(rec.hit_rate, None);
    let text = String::from_utf8(csv_bytes(&report)).unwrap();
    assert_eq!(text.matches(",censored,false").count(), 4);
}

#[test]
fn config_parsing_and_validation() {
    let text = r#"{"dist": {"kind": "gamma", "shape": 2.0, "rate": 1.0},
                   "sched": {"kind": "log_power", "coefficient": 2.0, "exponent": 1.0},
                   "n_values": [64, 128], "master_seed": 4}"#;
    let cfg = ExperimentConfig::from_json_str(text).unwrap();
    assert_eq!(cfg.trials, DEFAULT_TRIALS);
    assert_eq!(cfg.epsilon, DEFAULT_EPSILON);
    assert_eq!(cfg.delta, 0.1);
    assert_eq!(cfg.max_n, DEFAULT_MAX_N);
    cfg.validate().unwrap();
    assert!(ExperimentConfig::from_json_str(&text.replace("\"master_seed\"", "\"seed\"")).is_err());
    let mut bad = cfg.clone();
    bad.epsilon = 0.5;
    assert!(bad.validate().is_err());
    let mut bad = cfg.clone();
    bad.n_values = vec![DEFAULT_MAX_N + 1];
    assert!(bad.validate().is_err());
    let mut bad = cfg.clone();
    bad.sched = S::Power { exponent: 0.6 };
    assert!(bad.validate().is_err());
    let mut bad = cfg;
    bad.trials = 0;
    assert!(bad.validate().is_err());
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            ExperimentConfig::from_json_file(&path).unwrap().validate().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn second_moment_matches_enumeration() {
    // N_2 on four vertices is Binomial(6, 1/4): 6pq + 36p^2.
    let er = analytic_moments(&D::Degenerate { value: 1.0 }, &S::Constant { value: 2.0 }, 4, 2, 0.1).unwrap();
    assert_relative_eq!(er.second_moment, 3.375, max_relative = 1e-14);
    assert_relative_eq!(er.mean, 1.5, max_relative = 1e-14);
    // mpmath sum over all pairs of 3-subsets with quadrature moments.
    let g = analytic_moments(&D::Gamma { shape: 2.0, rate: 1.0 }, &S::Constant { value: 4.0 }, 6, 3, 0.1).unwrap();
    assert_relative_eq!(g.second_moment, 0.3495775339808822, max_relative = 1e-12);
    assert_relative_eq!(g.mean, 0.18623374693118747, max_relative = 1e-12);
    let g = analytic_moments(&D::Gamma { shape: 2.0, rate: 1.0 }, &S::Constant { value: 4.0 }, 20, 3, 0.1).unwrap();
    assert_relative_eq!(g.mean, 10.615323575077686, max_relative = 1e-12);
}

#[test]
fn variance_is_non_negative() {
    for d in [D::Degenerate { value: 1.0 }, D::Uniform01, D::Gamma { shape: 2.0, rate: 1.0 }, D::LogNormal] {
        for n in [5usize, 12, 32] {
            for r in 1..=n.min(8) {
                let m = analytic_moments(&d, &S::Constant { value: 3.0 }, n, r, 0.1).unwrap();
                assert!(m.variance >= -1e-9 * m.second_moment, "{d:?} n={n} r={r}: {}", m.variance);
                assert!(m.ratio >= 1.0 - 1e-12);
            }
        }
    }
}

#[test]
fn er_second_moment_ratio_is_a_sawtooth() {
    let d = D::Degenerate { value: 1.0 };
    let s = S::Constant { value: 2f64.sqrt() };
    let ratios: Vec<f64> = [16usize, 24, 32]
        .iter()
        .map(|&n| {
            let w = typical_clique_number(&d, &s, n as u64, 0.1, 1e-12).unwrap().omega_bar;
            analytic_moments(&d, &s, n, (w - 1.0).floor() as usize, 0.1).unwrap().ratio
        })
        .collect();
    assert_relative_eq!(ratios[0], 3.287, epsilon = 5e-4);
    assert_relative_eq!(ratios[1], 4.328, epsilon = 5e-4);
    assert_relative_eq!(ratios[2], 2.200, epsilon = 5e-4);
    assert!(ratios[2] < ratios[0]);
}

#[test]
fn er_clique_numbers_stay_near_typical_value() {
    let mut cfg = er_config(vec![64], 50, 2024);
    cfg.sched = S::Constant { value: 2.0 };
    let report = run_concentration_experiment(&cfg).unwrap();
    let rec = &report.records[0];
    for t in &rec.trials {
        let w = t.omega.unwrap() as f64;
        assert!((w - rec.omega_bar).abs() <= 2.0, "{w} vs {}", rec.omega_bar);
    }
    assert_eq!(rec.hit_rate, Some(rec.hits as f64 / 50.0));
}

#[test]
fn gamma_first_moment_diagnostic() {
    let d = D::Gamma { shape: 2.0, rate: 1.0 };
    let s = S::Constant { value: 4.0 };
    let diag = first_moment_diagnostic(&d, &s, 20, 3, 0.1, 2000, 31).unwrap();
    assert_relative_eq!(diag.target, 10.615323575077686, max_relative = 1e-12);
    assert!(diag.z_score.abs() <= 5.0, "{}", diag.z_score);
    let diag = second_moment_diagnostic(&d, &s, 12, 3, 0.1, 2000, 32).unwrap();
    assert!(diag.z_score.abs() <= 5.0, "{}", diag.z_score);
}

#[test]
fn diagnostics_enforce_limits() {
    let d = D::Degenerate { value: 1.0 };
    let s = S::Constant { value: 2.0 };
    assert!(matches!(
        first_moment_diagnostic(&d, &s, FIRST_MOMENT_MAX_N + 1, 3, 0.1, 10, 1),
        Err(cliquelab::Error::SizeLimit { .. })
    ));
    assert!(matches!(
        second_moment_diagnostic(&d, &s, SECOND_MOMENT_MAX_N + 1, 3, 0.1, 10, 1),
        Err(cliquelab::Error::SizeLimit { .. })
    ));
    assert!(first_moment_diagnostic(&d, &s, 10, 3, 0.1, 1, 1).is_err());
}
