//! Numeric reproduction of the diversity/fairness trade-off: with a baseline
//! core satisfying `⟨α_n⟩ < 1/n < ⟨α_1⟩`, the diversity-maximizing
//! intervention `w_d` (core `(0,…,0,1)`) and the fairness-maximizing `w_f`
//! (uniform core) do not Pareto-dominate each other.
//!
//! Generation is deterministic: each of `w_0`, `w_d`, `w_f` is a model
//! emitting one fixed trajectory, and the structures are tabulated so that
//! trajectory carries the stated compliance vector. Scores use `l2raw`,
//! natural logarithms and unit weights.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{ConstraintSystems, ScoreConfig};
use super::scores::intervention_score;
use crate::cores::LogBase;
use crate::error::{Error, Result};
use crate::model::{Alphabet, Next, TokenString, TrajectoryModel};
use crate::structures::{DiffMetric, Structure, System};

pub const PARETO_CONVENTIONS: &str = "deterministic generation; metric l2raw; natural log; all weights 1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoScores {
    pub core: Vec<f64>,
    pub score_explore: f64,
    pub score_diverge: f64,
    pub rho_d: f64,
    pub score_even: f64,
    pub score_inverted: f64,
    pub rho_f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoReport {
    pub n: usize,
    pub baseline: Vec<f64>,
    pub conventions: String,
    pub w_d: ParetoScores,
    pub w_f: ParetoScores,
    /// `ρ_d(w_d) > ρ_d(w_f)`
    pub diversity_prefers_w_d: bool,
    /// `ρ_f(w_d) < ρ_f(w_f)`
    pub fairness_prefers_w_f: bool,
    pub non_dominated: bool,
}

/// Checks `n ≥ 2`, components in `[0, 1]` and `⟨α_n⟩ < 1/n < ⟨α_1⟩`.
pub fn check_pareto_hypothesis(n: usize, baseline: &[f64]) -> Result<()> {
    if n < 2 {
        return Err(Error::HypothesisViolated(format!("n must be at least 2, got {n}")));
    }
    if baseline.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: baseline.len() });
    }
    if baseline.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::HypothesisViolated("baseline components must lie in [0, 1]".into()));
    }
    let inv = 1.0 / n as f64;
    if !(baseline[n - 1] < inv && inv < baseline[0]) {
        return Err(Error::HypothesisViolated(format!(
            "need baseline[n] < 1/n < baseline[1], got {} and {} with 1/n = {inv}",
            baseline[n - 1], baseline[0]
        )));
    }
    Ok(())
}

pub fn pareto_demo(n: usize, baseline: &[f64]) -> Result<ParetoReport> {
    check_pareto_hypothesis(n, baseline)?;
    let alphabet = Arc::new(Alphabet::new(["w0", "wd", "wf"])?);
    let model = |token: u32| -> Result<TrajectoryModel> {
        let mut row = vec![0.0; alphabet.outcomes()];
        row[token as usize] = 1.0;
        let leaf = TokenString::root().child(Next::Token(token));
        let mut end = vec![0.0; alphabet.outcomes()];
        end[alphabet.outcome_index(Next::End)] = 1.0;
        let branches = BTreeMap::from([(TokenString::root(), row), (leaf, end)]);
        TrajectoryModel::new(alphabet.clone(), 2, branches)
    };
    let trajectory = |token: u32| TokenString::root().child(Next::Token(token)).child(Next::End);
    let wd_core: Vec<f64> = (0..n).map(|i| if i == n - 1 { 1.0 } else { 0.0 }).collect();
    let wf_core = vec![1.0 / n as f64; n];
    let structures = (0..n)
        .map(|i| {
            Structure::tabulated(
                format!("alpha_{}", i + 1),
                [(trajectory(0), baseline[i]), (trajectory(1), wd_core[i]), (trajectory(2), wf_core[i])],
                None,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let system = System::new(structures)?;

    let cfg = ScoreConfig { metric: DiffMetric::L2raw, log_base: LogBase::Natural, ..ScoreConfig::default() };
    let w0 = model(0)?;
    let score = |token| -> Result<ParetoScores> {
        let b = intervention_score(&model(token)?, &w0, &TokenString::root(), &system, &ConstraintSystems::default(), &cfg)?;
        Ok(ParetoScores {
            core: b.core,
            score_explore: b.score_explore,
            score_diverge: b.score_diverge,
            rho_d: b.rho_d,
            score_even: b.score_even.unwrap_or(0.0),
            score_inverted: b.score_inverted,
            rho_f: b.rho_f,
        })
    };
    let w_d = score(1)?;
    let w_f = score(2)?;
    let diversity_prefers_w_d = w_d.rho_d > w_f.rho_d;
    let fairness_prefers_w_f = w_d.rho_f < w_f.rho_f;
    Ok(ParetoReport {
        n,
        baseline: baseline.to_vec(),
        conventions: PARETO_CONVENTIONS.to_owned(),
        w_d,
        w_f,
        diversity_prefers_w_d,
        fairness_prefers_w_f,
        non_dominated: diversity_prefers_w_d && fairness_prefers_w_f,
    })
}
