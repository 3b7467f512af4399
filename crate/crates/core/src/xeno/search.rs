use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{draw_index, stream_rng, TokenString, TrajectoryModel};
use crate::numeric::{log_sum_exp, sum, CompensatedSum};

/// `π_i ∝ exp(β·score_i)`. `β = +∞` spreads mass uniformly over the maxima.
pub fn boltzmann_weights(scores: &[f64], beta: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyVector);
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be non-negative, got {beta}")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    if beta == f64::INFINITY {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let winners = scores.iter().filter(|s| **s == max).count() as f64;
        return Ok(scores.iter().map(|s| if *s == max { 1.0 / winners } else { 0.0 }).collect());
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let logits: Vec<f64> = scores.iter().map(|s| beta * (s - max)).collect();
    let log_z = log_sum_exp(&logits);
    Ok(logits.iter().map(|l| (l - log_z).exp()).collect())
}

/// Index of one candidate drawn with probability `∝ exp(β·score)`.
pub fn sample_intervention(scores: &[f64], beta: f64, seed: u64) -> Result<usize> {
    let pi = boltzmann_weights(scores, beta)?;
    let mut rng = stream_rng(seed, 0);
    draw_index(&pi, rng.gen::<f64>()).ok_or(Error::EmptyVector)
}

/// `Σ_w π(w)·p(y | prompt, w)` over the trajectories of every candidate.
pub fn mixture_distribution(
    models: &[TrajectoryModel],
    weights: &[f64],
    prompt: &TokenString,
) -> Result<BTreeMap<TokenString, f64>> {
    if models.is_empty() {
        return Err(Error::EmptyVector);
    }
    if models.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: models.len(), found: weights.len() });
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || (sum(weights.iter().copied()) - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized("mixture weights".into()));
    }
    let mut acc: BTreeMap<TokenString, CompensatedSum> = BTreeMap::new();
    for (model, &pi) in models.iter().zip(weights) {
        if pi == 0.0 {
            continue;
        }
        for t in model.enumerate_trajectories(prompt)? {
            acc.entry(t.string).or_default().add(pi * t.prob);
        }
    }
    Ok(acc.into_iter().map(|(y, p)| (y, p.value())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;
    use proptest::prelude::*;

    #[test]
    fn softmax_examples() {
        let pi = boltzmann_weights(&[0.0, 2f64.ln()], 1.0).unwrap();
        assert!((pi[0] - 1.0 / 3.0).abs() < 1e-15 && (pi[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(boltzmann_weights(&[3.0, -1.0, 7.0], 0.0).unwrap(), vec![1.0 / 3.0; 3]);
        assert_eq!(boltzmann_weights(&[5.0], 2.0).unwrap(), vec![1.0]);
        assert_eq!(boltzmann_weights(&[1.0, 2.0, 2.0], f64::INFINITY).unwrap(), vec![0.0, 0.5, 0.5]);
        assert!(boltzmann_weights(&[], 1.0).is_err());
    }

    #[test]
    fn draws_follow_the_weights() {
        assert_eq!(sample_intervention(&[4.2], 1.0, 3).unwrap(), 0);
        let scores = [0.0, 2f64.ln()];
        let n = 30_000;
        let hits = (0..n).filter(|&s| sample_intervention(&scores, 1.0, s).unwrap() == 1).count() as f64;
        let se = ((2.0 / 9.0) / n as f64).sqrt();
        assert!((hits / n as f64 - 2.0 / 3.0).abs() < 4.0 * se);
        assert_eq!(sample_intervention(&scores, 1.0, 77).unwrap(), sample_intervention(&scores, 1.0, 77).unwrap());
    }

    #[test]
    fn mixture_examples() {
        let m2 = fixtures::m2();
        let flipped = TrajectoryModel::from_json_str(
            r#"{"tokens":["a","b"],"max_len":4,"branches":{"":{"a":0.75,"b":0.25},"a":{"<eos>":1},"b":{"<eos>":1}}}"#,
        )
        .unwrap();
        let root = TokenString::root();
        let mix = mixture_distribution(&[m2.clone(), flipped], &[0.5, 0.5], &root).unwrap();
        assert_eq!(mix[&m2.parse("a <eos>").unwrap()], 0.5);
        let single = mixture_distribution(std::slice::from_ref(&m2), &[1.0], &root).unwrap();
        for t in m2.enumerate_trajectories(&root).unwrap() {
            assert_eq!(single[&t.string], t.prob);
        }
        assert!(mixture_distribution(std::slice::from_ref(&m2), &[0.5], &root).is_err());
    }

    proptest! {
        #[test]
        fn softmax_shift_invariance(scores in prop::collection::vec(-5.0..5.0f64, 1..6), c in -50.0..50.0f64, beta in 0.0..5.0f64) {
            let a = boltzmann_weights(&scores, beta).unwrap();
            let shifted: Vec<f64> = scores.iter().map(|s| s + c).collect();
            let b = boltzmann_weights(&shifted, beta).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn argmax_mass_grows_with_beta(scores in prop::collection::vec(-5.0..5.0f64, 2..6)) {
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assume!(scores.iter().filter(|s| **s == max).count() == 1);
            let i = scores.iter().position(|s| *s == max).unwrap();
            let mut prev = 0.0;
            for beta in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0, f64::INFINITY] {
                let p = boltzmann_weights(&scores, beta).unwrap()[i];
                prop_assert!(p >= prev - 1e-15);
                prev = p;
            }
        }

        #[test]
        fn mixtures_sum_to_one(w in 0.0..=1.0f64) {
            let m1 = fixtures::m1();
            let m2 = fixtures::m2();
            let mix = mixture_distribution(&[m1, m2], &[w, 1.0 - w], &TokenString::root()).unwrap();
            prop_assert!((mix.values().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
