//! Random desk-scale trees and indicator systems with probabilities on a
//! 1/100 grid, so every branch probability is an exact decimal.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Alphabet, Next, TokenString, TrajectoryModel};
use crate::structures::{Structure, System};

pub const MAX_TOKENS: usize = 4;
pub const MAX_DEPTH: usize = 5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Splits 100 into `parts` non-negative integers, each zero with
/// probability `sparsity`, at least one positive.
fn grid_row<R: Rng>(rng: &mut R, parts: usize, sparsity: f64) -> Vec<f64> {
    let mut active: Vec<usize> = (0..parts).filter(|_| !rng.gen_bool(sparsity)).collect();
    if active.is_empty() {
        active.push(rng.gen_range(0..parts));
    }
    let mut cuts: Vec<u32> = (0..active.len() - 1).map(|_| rng.gen_range(1..100)).collect();
    cuts.sort_unstable();
    let mut row = vec![0.0; parts];
    let mut prev = 0;
    for (k, &i) in active.iter().enumerate() {
        let next = cuts.get(k).copied().unwrap_or(100);
        row[i] = f64::from(next - prev) / 100.0;
        prev = next;
    }
    row
}

/// A valid model over 1 to 4 tokens with `max_len` up to 5.
pub fn random_tree<R: Rng>(rng: &mut R) -> TrajectoryModel {
    let n = rng.gen_range(1..=MAX_TOKENS);
    let names: Vec<String> = (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let alphabet = Arc::new(Alphabet::new(names).expect("generated alphabet is valid"));
    let max_len = rng.gen_range(1..=MAX_DEPTH);
    let mut branches = BTreeMap::new();
    let mut frontier = vec![TokenString::root()];
    while let Some(prefix) = frontier.pop() {
        let row = if prefix.len() + 2 > max_len {
            let mut row = vec![0.0; n + 1];
            row[n] = 1.0;
            row
        } else {
            // Sparser rows deeper down keep trees small.
            grid_row(rng, n + 1, 0.3 + 0.1 * prefix.len() as f64)
        };
        for (i, &p) in row.iter().enumerate().take(n) {
            if p > 0.0 {
                frontier.push(prefix.child(Next::Token(i as u32)));
            }
        }
        branches.insert(prefix, row);
    }
    TrajectoryModel::new(alphabet, max_len, branches).expect("generated tree is valid")
}

/// One to three token and bigram indicators over `alphabet`.
pub fn random_system<R: Rng>(rng: &mut R, alphabet: &Arc<Alphabet>) -> System {
    let n = alphabet.len() as u32;
    let count = rng.gen_range(1..=3);
    let structures = (0..count)
        .map(|k| {
            if rng.gen_bool(0.5) {
                Structure::token_indicator(format!("s{k}"), rng.gen_range(0..n))
            } else {
                Structure::ngram_indicator(format!("s{k}"), vec![rng.gen_range(0..n), rng.gen_range(0..n)])
            }
        })
        .collect();
    System::new(structures).expect("generated names are unique")
}

/// A uniformly chosen positive-probability trajectory of `model`.
pub fn random_trajectory<R: Rng>(rng: &mut R, model: &TrajectoryModel) -> TokenString {
    let all = model.enumerate_trajectories(&TokenString::root()).expect("generated trees are enumerable");
    all.choose(rng).expect("trees have at least one trajectory").string.clone()
}

/// Random subset of the model's trajectories.
pub fn random_subset<R: Rng>(rng: &mut R, model: &TrajectoryModel) -> Vec<TokenString> {
    model
        .enumerate_trajectories(&TokenString::root())
        .expect("generated trees are enumerable")
        .into_iter()
        .filter(|_| rng.gen_bool(0.5))
        .map(|t| t.string)
        .collect()
}

/// Strictly decreasing core on a 1/1000 grid with `b[n−1] < 1/n < b[0]`,
/// for `2 ≤ n ≤ 100`.
pub fn random_pareto_baseline<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    assert!((2..=100).contains(&n), "baseline size out of range");
    let inv = 1000 / n as u32;
    loop {
        let hi = rng.gen_range(inv + 1..=1000);
        let lo = rng.gen_range(0..inv);
        if hi - lo - 1 < (n - 2) as u32 {
            continue;
        }
        let mut inner: Vec<u32> = (0..n - 2).map(|_| rng.gen_range(lo + 1..hi)).collect();
        inner.sort_unstable_by(|a, b| b.cmp(a));
        inner.dedup();
        if inner.len() + 2 == n {
            let mut out = vec![f64::from(hi) / 1000.0];
            out.extend(inner.iter().map(|v| f64::from(*v) / 1000.0));
            out.push(f64::from(lo) / 1000.0);
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_trees_are_valid_and_small() {
        let mut r = rng(1);
        for _ in 0..200 {
            let m = random_tree(&mut r);
            assert!(m.alphabet().len() <= MAX_TOKENS && m.max_len() <= MAX_DEPTH);
            let ts = m.enumerate_trajectories(&TokenString::root()).unwrap();
            let total: f64 = ts.iter().map(|t| t.prob).sum();
            assert!((total - 1.0).abs() < 1e-9);
            for row in m.branches().values() {
                for p in row {
                    assert_eq!((p * 100.0).round() / 100.0, *p);
                }
            }
            let s = random_system(&mut r, m.alphabet_arc());
            assert!(!s.is_empty());
        }
    }

    #[test]
    fn pareto_baselines_satisfy_hypothesis() {
        let mut r = rng(3);
        for n in 2..=8 {
            let b = random_pareto_baseline(&mut r, n);
            assert_eq!(b.len(), n);
            assert!(b.windows(2).all(|w| w[0] > w[1]));
            assert!(b[n - 1] * (n as f64) < 1.0 && 1.0 < b[0] * n as f64);
        }
    }

    #[test]
    fn grid_rows_sum_to_one_exactly_in_hundredths() {
        let mut r = rng(2);
        for parts in 1..6 {
            let row = grid_row(&mut r, parts, 0.5);
            let cents: f64 = row.iter().map(|p| (p * 100.0).round()).sum();
            assert_eq!(cents, 100.0);
        }
    }
}
