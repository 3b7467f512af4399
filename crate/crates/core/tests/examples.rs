//! Worked examples through the public API.

use std::f64::consts::LN_2;

use xenodiv::cores::{core_entropy, estimate_core_mc, normalized_core, rank_structures, LogBase, Provenance};
use xenodiv::model::{apply_intervention, fixtures, Intervention, TokenString, Transform};
use xenodiv::orientation::{hill_deviances, renyi_relative_entropy};
use xenodiv::xeno::{boltzmann_weights, mixture_distribution, tilt_by_rewards};

#[test]
fn entropy_and_normalization() {
    let h = core_entropy(&[0.2, 0.2, 0.6], LogBase::Natural).unwrap();
    assert!((h - 0.950271).abs() < 1e-6);
    assert_eq!(normalized_core(&[0.2, 0.2]).unwrap(), vec![0.5, 0.5]);
    assert!(normalized_core(&[0.0, 0.0]).is_err());
    let n = 5.0f64;
    assert!((core_entropy(&[0.2; 5], LogBase::Natural).unwrap() - n.ln()).abs() < 1e-12);
    assert_eq!(core_entropy(&[0.0, 0.0, 1.0], LogBase::Natural).unwrap(), 0.0);
    assert_eq!(rank_structures(&[0.1, 0.6, 0.6]), vec![vec![0], vec![1, 2]]);
}

#[test]
fn monte_carlo_core_is_within_three_errors() {
    let m2 = fixtures::m2();
    let sys = fixtures::s2(&m2);
    let est = estimate_core_mc(&m2, &TokenString::root(), &sys, 100_000, 77).unwrap();
    let Provenance::MonteCarlo { std_error, .. } = &est.provenance else { panic!("expected an estimate") };
    for ((v, se), exact) in est.values.iter().zip(std_error).zip([0.25, 0.75]) {
        assert!((v - exact).abs() <= 3.0 * se);
    }
    let m3 = fixtures::m3();
    let est = estimate_core_mc(&m3, &TokenString::root(), &fixtures::s2(&m3), 100, 1).unwrap();
    assert_eq!(est.values, vec![0.0, 1.0]);
}

#[test]
fn boltzmann_and_mixture() {
    let w = boltzmann_weights(&[0.0, LN_2], 1.0).unwrap();
    assert!((w[0] - 1.0 / 3.0).abs() < 1e-12 && (w[1] - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(boltzmann_weights(&[4.2], 1.0).unwrap(), vec![1.0]);
    let mix = mixture_distribution(&[fixtures::m1(), fixtures::m3()], &[0.5, 0.5], &TokenString::root()).unwrap();
    let m1 = fixtures::m1();
    assert!((mix[&m1.parse("a <eos>").unwrap()] - 0.25).abs() < 1e-12);
    assert!((mix[&m1.parse("b <eos>").unwrap()] - 0.75).abs() < 1e-12);
}

#[test]
fn strong_tilt_concentrates_on_best_reward() {
    let t = tilt_by_rewards(&[0.7, 0.2, 0.1], &[0.0, 0.5, 1.0], 1e3).unwrap();
    assert!(t[2] >= 1.0 - 1e-6);
}

#[test]
fn renyi_and_hill() {
    let (ex, _) = hill_deviances(&[0.8, 0.2], &[0.5, 0.5], f64::INFINITY).unwrap();
    assert!((ex - 1.6).abs() < 1e-12);
    assert_eq!(renyi_relative_entropy(&[0.3, 0.7], &[0.3, 0.7], 2.0).unwrap(), 0.0);
}

#[test]
fn temperature_flattens_m2() {
    let m2 = fixtures::m2();
    let hot = apply_intervention(&m2, &Intervention::new("hot", vec![Transform::Temperature(1e6)])).unwrap();
    let p = hot.next_prob(&TokenString::root(), m2.alphabet().next_symbol("a").unwrap()).unwrap();
    assert!((p - 0.5).abs() < 1e-5);
}
