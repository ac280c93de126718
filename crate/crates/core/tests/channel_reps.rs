//! Channel representations across crate boundaries: JSON with pattern keys and
//! conversion invariants on four single-qubit subsystems.

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use corrrb::channel::{
    decays_from_fixed_weight, decays_from_ptm, decays_from_weight_params, fixed_weight_from_decays, ptm_from_probs,
    weight_params_from_decays, FixedWeightCoeffs, PauliChannelProbs, PtmDiagonal, SubspaceDecays, WeightParams,
};
use corrrb::pauli::Partition;

fn singles4() -> Partition {
    Partition::singletons(4).unwrap()
}

fn channel(seed: u64) -> PauliChannelProbs {
    let mut rng = corrrb::rng::stream(seed, &[]);
    PauliChannelProbs::random(4, 0.9, &mut rng)
}

#[test]
fn pattern_maps_use_subsystem_strings() {
    let b = singles4();
    let ch = channel(1);
    let alpha = decays_from_ptm(&ptm_from_probs(&ch), &b).unwrap().decays;
    let v: serde_json::Value = serde_json::to_value(&alpha).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 16);
    assert!(keys.iter().all(|k| k.len() == 4 && k.chars().all(|c| c == '0' || c == '1')));
    assert_eq!(v["0000"], 1.0);

    let eps = weight_params_from_decays(&alpha, &b).unwrap();
    let v = serde_json::to_value(&eps).unwrap();
    let obj = v.as_object().unwrap();
    assert_eq!(obj.len(), 15, "empty pattern carries no parameter");
    assert!(obj["1000"]["cptp"].is_boolean());
    assert_abs_diff_eq!(obj["0110"]["value"].as_f64().unwrap(), eps.values()[0b0110], epsilon = 0.0);
}

#[test]
fn pattern_label_lists_subsystem_zero_first() {
    let b = Partition::new(vec![vec![0, 1], vec![2]]).unwrap();
    // two-qubit flip on subsystem 0 only
    let mut probs = vec![0.0; 64];
    probs[0] = 0.9;
    probs["XXI".parse::<corrrb::PauliOperator>().unwrap().index()] = 0.1;
    let p_s = PauliChannelProbs::new(3, probs).unwrap().pattern_masses(&b).unwrap();
    let v = serde_json::to_value(&p_s).unwrap();
    assert_abs_diff_eq!(v["10"].as_f64().unwrap(), 0.1, epsilon = 1e-15);
    assert_abs_diff_eq!(v["01"].as_f64().unwrap(), 0.0, epsilon = 1e-15);
}

#[test]
fn json_round_trips_are_exact() {
    let b = singles4();
    let ch = channel(2);
    let back: PauliChannelProbs = serde_json::from_str(&serde_json::to_string(&ch).unwrap()).unwrap();
    assert_eq!(back, ch);
    let r = ptm_from_probs(&ch);
    let back: PtmDiagonal = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
    let alpha = decays_from_ptm(&r, &b).unwrap().decays;
    let back: SubspaceDecays = serde_json::from_str(&serde_json::to_string(&alpha).unwrap()).unwrap();
    assert_eq!(back, alpha);
    let p_s = fixed_weight_from_decays(&alpha, &b).unwrap();
    let back: FixedWeightCoeffs = serde_json::from_str(&serde_json::to_string(&p_s).unwrap()).unwrap();
    assert_eq!(back, p_s);
}

#[test]
fn malformed_pattern_json_is_rejected() {
    assert!(serde_json::from_str::<SubspaceDecays>(r#"{"00": 1.0, "10": 0.9, "01": 0.9}"#).is_err());
    assert!(serde_json::from_str::<SubspaceDecays>(r#"{"00": 1.0, "10": 0.9, "01": 0.9, "110": 0.8}"#).is_err());
    assert!(serde_json::from_str::<SubspaceDecays>(r#"{"0a": 1.0}"#).is_err());
    assert!(serde_json::from_str::<PauliChannelProbs>(r#"{"IQ": 1.0}"#).is_err());
    assert!(serde_json::from_str::<PauliChannelProbs>(r#"{"I": 1.0, "XX": 0.0}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weight_params_invert_decays(eps in prop::collection::vec(0.0f64..0.1, 15)) {
        let b = singles4();
        let mut values = vec![0.0];
        values.extend(eps);
        let e = WeightParams::new(values.clone(), &b).unwrap();
        let alpha = decays_from_weight_params(&e, &b).unwrap();
        let back = weight_params_from_decays(&alpha, &b).unwrap();
        for (g, w) in back.values().iter().zip(&values).skip(1) {
            prop_assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
        prop_assert!(back.all_cptp());
    }

    #[test]
    fn composition_multiplies_decays(s1 in 0u64..1000, s2 in 0u64..1000) {
        let b = singles4();
        let (x, y) = (channel(s1), channel(s2 + 1000));
        let a = |c: &PauliChannelProbs| decays_from_ptm(&ptm_from_probs(c), &b).unwrap().decays;
        let (ax, ay, axy) = (a(&x), a(&y), a(&x.compose(&y).unwrap()));
        // pattern averaging commutes with composition only after twirling
        let tx = fixed_weight_from_decays(&ax, &b).unwrap().expand(&b).unwrap();
        let ty = fixed_weight_from_decays(&ay, &b).unwrap().expand(&b).unwrap();
        let atw = a(&tx.compose(&ty).unwrap());
        for i in 0..16 {
            prop_assert!((atw.values()[i] - ax.values()[i] * ay.values()[i]).abs() < 1e-12);
        }
        prop_assert!(axy.values().iter().all(|v| (-1.0..=1.0 + 1e-12).contains(v)));
    }

    #[test]
    fn pattern_masses_are_a_distribution(seed in 0u64..10_000) {
        let b = singles4();
        let ch = channel(seed);
        let p_s = ch.pattern_masses(&b).unwrap();
        prop_assert!((p_s.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p_s.is_cptp());
        let alpha = decays_from_fixed_weight(&p_s, &b).unwrap();
        let direct = decays_from_ptm(&ptm_from_probs(&ch), &b).unwrap().decays;
        for (g, w) in alpha.values().iter().zip(direct.values()) {
            prop_assert!((g - w).abs() < 1e-12);
        }
    }
}
