//! `Sequential` and `Parallel` must agree bit for bit.

use xenodiv::cores::{estimate_core_mc_with, system_core_with};
use xenodiv::model::{fixtures, sample_trajectories, Intervention, TokenString, Transform};
use xenodiv::oracle::random::{random_system, random_tree, rng};
use xenodiv::orientation::{deviance_stats_mc, deviance_stats_with, dynamics_trace_with};
use xenodiv::structures::DiffMetric;
use xenodiv::xeno::{
    sample_tilted, score_candidates, snis_tilted, tilted_distribution_with, ConstraintSystems, RewardSpec,
    ScoreConfig,
};
use xenodiv::Exec;

const MODES: [Exec; 2] = [Exec::Sequential, Exec::Parallel];

#[test]
fn monte_carlo_and_sampling() {
    let mut r = rng(21);
    let root = TokenString::root();
    for seed in 0..30u64 {
        let m = random_tree(&mut r);
        let sys = random_system(&mut r, m.alphabet_arc());
        let [a, b] = MODES.map(|e| estimate_core_mc_with(&m, &root, &sys, 300, seed, e).unwrap());
        assert_eq!(a, b);
        let [a, b] = MODES.map(|e| sample_trajectories(&m, &root, seed, 100, e).unwrap());
        assert_eq!(a, b);
        let [a, b] = MODES.map(|e| deviance_stats_mc(&m, &root, &sys, DiffMetric::L2norm, 200, seed, e).unwrap());
        assert_eq!(a, b);
    }
}

#[test]
fn exact_paths() {
    let mut r = rng(22);
    let root = TokenString::root();
    for _ in 0..50 {
        let m = random_tree(&mut r);
        let sys = random_system(&mut r, m.alphabet_arc());
        let [a, b] = MODES.map(|e| system_core_with(&m, &root, &sys, e).unwrap());
        assert_eq!(a, b);
        let [a, b] = MODES.map(|e| deviance_stats_with(&m, &root, &sys, DiffMetric::Linf, e).unwrap());
        assert_eq!(a, b);
        let y = m.enumerate_trajectories(&root).unwrap().pop().unwrap().string;
        let [a, b] = MODES.map(|e| dynamics_trace_with(&m, &sys, &y, &root, e).unwrap());
        assert_eq!(a, b);
    }
}

#[test]
fn scoring_and_tilting() {
    let m2 = fixtures::m2();
    let sys = fixtures::s2(&m2);
    let root = TokenString::root();
    let cfg = ScoreConfig::default();
    let cands: Vec<Intervention> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&t| Intervention::new(format!("t{t}"), vec![Transform::Temperature(t)]))
        .collect();
    let cs = ConstraintSystems::default();
    let [a, b] = MODES.map(|e| score_candidates(&m2, &root, &sys, &cs, &cands, &cfg, e).unwrap());
    assert_eq!(a, b);

    let spec = RewardSpec::new(&m2, &root, sys.clone(), cs, &cfg).unwrap();
    let [a, b] = MODES.map(|e| tilted_distribution_with(&m2, &spec, 1.5, e).unwrap());
    assert_eq!(a, b);
    let [x, y] = MODES.map(|e| sample_tilted(&a, 1000, 9, e).unwrap());
    assert_eq!(x, y);
    let [x, y] = MODES.map(|e| snis_tilted(&m2, &spec, 1.5, 400, 9, e).unwrap());
    assert_eq!(x, y);
}
