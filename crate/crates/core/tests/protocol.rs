//! Protocol-level invariants: sequence inversion, fit recovery, device loading
//! and end-to-end consistency between the dataset and the analysis.

use proptest::prelude::*;

use corrrb::clifford::CliffordElement;
use corrrb::pauli::Partition;
use corrrb::protocol::{analyze, fit_decay, generate_sequences, run_corr_rb, CorrRbConfig, FitPoint, Timing};
use corrrb::simulator::DeviceModel;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sequences_compose_to_identity(l in 1usize..40, seed in any::<u64>(), trial in 0u64..100) {
        let b = Partition::new(vec![vec![0, 1], vec![2], vec![3]]).unwrap();
        let seqs = generate_sequences(&b, l, seed, trial).unwrap();
        prop_assert_eq!(seqs.len(), 3);
        for (j, seq) in seqs.iter().enumerate() {
            prop_assert_eq!(seq.len(), l);
            let mut total = CliffordElement::identity(b.subsystem(j).len()).unwrap();
            for g in seq {
                total = g.compose(&total).unwrap();
            }
            prop_assert!(total.is_identity());
        }
    }

    #[test]
    fn fit_recovers_noiseless_decays(a in 0.2f64..0.9, alpha in 0.9f64..0.999, b in 0.0f64..0.3) {
        let pts: Vec<FitPoint> = [1usize, 10, 25, 50, 75, 100, 150, 200, 300]
            .iter()
            .map(|&l| FitPoint { l: l as f64, y: a * alpha.powi(l as i32) + b, stderr: 0.0 })
            .collect();
        let f = fit_decay(&pts).unwrap();
        prop_assert!((f.alpha - alpha).abs() < 1e-7, "alpha {} vs {}", f.alpha, alpha);
        prop_assert!((f.a - a).abs() < 1e-5);
        prop_assert!((f.b - b).abs() < 1e-5);
    }
}

#[test]
fn device_model_loads_from_json() {
    let text = serde_json::to_string_pretty(&DeviceModel::paper4q()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("device.json");
    std::fs::write(&path, &text).unwrap();
    assert_eq!(DeviceModel::load(&path).unwrap(), DeviceModel::paper4q());

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["t1"] = serde_json::json!([1.0]);
    assert!(DeviceModel::from_json(&v.to_string()).unwrap_err().is_config());
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["t1_us"] = serde_json::json!([45.0, 57.0]);
    assert!(DeviceModel::from_json(&v.to_string()).is_err());
}

#[test]
fn relaxation_decays_match_exact_probabilities() {
    // with exact probabilities the correlators carry no shot noise, so every
    // trial average follows the Clifford-averaged channel up to sequence sampling
    let b = Partition::singletons(2).unwrap();
    let mut device = DeviceModel::relaxation_only();
    device.n = 2;
    device.t1_us.truncate(2);
    device.t2_us.truncate(2);
    device.readout = corrrb::simulator::Readout::perfect(2);
    let mut cfg = CorrRbConfig::new(b.clone());
    cfg.exact_probabilities = true;
    cfg.trials = 20;
    cfg.timing = Timing::Layer;
    cfg.seed = 4;
    let data = run_corr_rb(&cfg, &device).unwrap();
    let report = analyze(&data, &b).unwrap();
    // without crosstalk the joint decay factorizes
    let a = |s: &str| report.summary(s).unwrap().alpha;
    assert!((a("11") - a("10") * a("01")).abs() < 3e-4, "{} vs {}", a("11"), a("10") * a("01"));
    for p in &report.patterns {
        assert!(p.alpha < 1.0 && p.alpha > 0.9, "{}: {}", p.pattern, p.alpha);
    }
    let eps11 = report.summary("11").unwrap().eps;
    assert!(eps11.abs() < 5e-4, "eps_11 {eps11}");
}

#[test]
fn csv_matches_dataset() {
    let b = Partition::singletons(4).unwrap();
    let mut cfg = CorrRbConfig::new(b.clone());
    cfg.lengths = vec![1, 3, 7];
    cfg.trials = 2;
    cfg.shots = 100;
    let data = run_corr_rb(&cfg, &DeviceModel::paper4q()).unwrap();
    let csv = data.to_csv();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 15 * 3);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let s = corrrb::SupportPattern::parse(f[0]).unwrap();
        let l: usize = f[1].parse().unwrap();
        let point = data.curve(s).points.iter().find(|p| p.l == l).unwrap();
        assert_eq!(f[2].parse::<f64>().unwrap(), point.mean);
        assert_eq!(f[3].parse::<f64>().unwrap(), point.stderr);
    }
}
