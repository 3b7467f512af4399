//! Declarative transforms turning a baseline model into an intervened one.
//!
//! Transforms compose in list order; composition is not commutative.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::string::{Next, TokenId, TokenString};
use super::tree::TrajectoryModel;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Scalar reward over the trajectories of a fixed prompt.
pub trait TrajectoryReward: Send + Sync {
    fn prompt(&self) -> &TokenString;

    fn reward(&self, y: &TokenString) -> Result<f64>;
}

/// Serializable form of a transform, as found in intervention-candidate
/// documents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformSpec {
    PrependPrompt(Vec<String>),
    Temperature(f64),
    TokenBias(BTreeMap<String, f64>),
    /// Binds to the reward specification supplied by the caller.
    RewardTilt { beta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionSpec {
    pub name: String,
    #[serde(default)]
    pub transforms: Vec<TransformSpec>,
}

#[derive(Clone)]
pub enum Transform {
    PrependPrompt(Vec<TokenId>),
    Temperature(f64),
    TokenBias(Vec<(Next, f64)>),
    RewardTilt { beta: f64, reward: Arc<dyn TrajectoryReward> },
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::PrependPrompt(t) => f.debug_tuple("PrependPrompt").field(t).finish(),
            Transform::Temperature(t) => f.debug_tuple("Temperature").field(t).finish(),
            Transform::TokenBias(b) => f.debug_tuple("TokenBias").field(b).finish(),
            Transform::RewardTilt { beta, .. } => f.debug_struct("RewardTilt").field("beta", beta).finish(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Intervention {
    pub name: String,
    pub transforms: Vec<Transform>,
}

impl Intervention {
    pub fn identity() -> Self {
        Self { name: "identity".into(), transforms: Vec::new() }
    }

    pub fn new(name: impl Into<String>, transforms: Vec<Transform>) -> Self {
        Self { name: name.into(), transforms }
    }

    pub fn is_identity(&self) -> bool {
        self.transforms.is_empty()
    }

    /// Resolves token names against `model`'s alphabet. `reward` is bound to
    /// every `reward_tilt` transform; a tilt without a reward is an error.
    pub fn resolve(
        spec: &InterventionSpec,
        model: &TrajectoryModel,
        reward: Option<Arc<dyn TrajectoryReward>>,
    ) -> Result<Self> {
        let alphabet = model.alphabet();
        let transforms = spec
            .transforms
            .iter()
            .map(|t| match t {
                TransformSpec::PrependPrompt(tokens) => alphabet
                    .resolve_tokens(tokens)
                    .map(Transform::PrependPrompt)
                    .map_err(|e| Error::InvalidIntervention(e.to_string())),
                TransformSpec::Temperature(tau) => Ok(Transform::Temperature(*tau)),
                TransformSpec::TokenBias(bias) => bias
                    .iter()
                    .map(|(name, &b)| {
                        alphabet
                            .next_symbol(name)
                            .map(|n| (n, b))
                            .ok_or_else(|| Error::InvalidIntervention(format!("bias on unknown token '{name}'")))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Transform::TokenBias),
                TransformSpec::RewardTilt { beta } => reward
                    .clone()
                    .map(|reward| Transform::RewardTilt { beta: *beta, reward })
                    .ok_or_else(|| Error::InvalidIntervention("reward_tilt requires a reward specification".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { name: spec.name.clone(), transforms })
    }
}

/// Applies `w`'s transforms in order. The result is fully re-validated.
pub fn apply_intervention(model: &TrajectoryModel, w: &Intervention) -> Result<TrajectoryModel> {
    let mut current = model.clone();
    for t in &w.transforms {
        current = match t {
            Transform::PrependPrompt(tokens) => prepend_prompt(&current, tokens)?,
            Transform::Temperature(tau) => temperature(&current, *tau)?,
            Transform::TokenBias(bias) => token_bias(&current, bias)?,
            Transform::RewardTilt { beta, reward } => reward_tilt(&current, reward.as_ref(), *beta)?,
        };
    }
    Ok(current)
}

/// Conditions on `tokens`: the new root distribution is the old
/// distribution after `<bos> tokens`. Strings of the result no longer carry
/// the prompt tokens.
fn prepend_prompt(model: &TrajectoryModel, tokens: &[TokenId]) -> Result<TrajectoryModel> {
    let prompt = TokenString::new(tokens.to_vec(), false);
    if model.branch(&prompt).is_none() {
        return Err(Error::InvalidIntervention(format!(
            "prompt '{}' has no branch in the model",
            model.render(&prompt)
        )));
    }
    let branches = model
        .branches()
        .iter()
        .filter(|(k, _)| prompt.is_prefix_of(k))
        .map(|(k, row)| (k.strip_prefix(tokens.len()), row.clone()))
        .collect();
    TrajectoryModel::new(model.alphabet_arc().clone(), model.max_len() - tokens.len(), branches)
}

fn renormalize(row: &mut [f64]) -> Result<()> {
    let total = crate::numeric::sum(row.iter().copied());
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InvalidIntervention("transform removed all probability mass from a branch".into()));
    }
    for p in row.iter_mut() {
        *p /= total;
    }
    Ok(())
}

/// Reweights every branch through log-space `f`, then renormalizes.
fn map_rows(model: &TrajectoryModel, f: impl Fn(usize, f64) -> f64) -> Result<TrajectoryModel> {
    let mut branches = BTreeMap::new();
    for (prefix, row) in model.branches() {
        let logs: Vec<f64> = row.iter().enumerate().map(|(i, &p)| if p > 0.0 { f(i, p.ln()) } else { f64::NEG_INFINITY }).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut new_row: Vec<f64> =
            logs.iter().map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { (l - max).exp() }).collect();
        renormalize(&mut new_row)?;
        branches.insert(prefix.clone(), new_row);
    }
    TrajectoryModel::new(model.alphabet_arc().clone(), model.max_len(), branches)
}

/// `p^(1/tau)` renormalized per branch.
fn temperature(model: &TrajectoryModel, tau: f64) -> Result<TrajectoryModel> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidIntervention(format!("temperature must be positive and finite, got {tau}")));
    }
    if tau == 1.0 {
        return Ok(model.clone());
    }
    map_rows(model, |_, lp| lp / tau)
}

/// Additive log-probability bias, renormalized per branch.
fn token_bias(model: &TrajectoryModel, bias: &[(Next, f64)]) -> Result<TrajectoryModel> {
    if bias.is_empty() {
        return Ok(model.clone());
    }
    if let Some((_, b)) = bias.iter().find(|(_, b)| b.is_nan() || *b == f64::INFINITY) {
        return Err(Error::InvalidIntervention(format!("bias {b} is not allowed")));
    }
    let alphabet = model.alphabet();
    let mut dense = vec![0.0; alphabet.outcomes()];
    for &(next, b) in bias {
        dense[alphabet.outcome_index(next)] += b;
    }
    map_rows(model, |i, lp| lp + dense[i])
}

/// Exact exponential tilt of the subtree under the reward's prompt:
/// `p'(y | prompt) ∝ p(y | prompt) · exp(beta · r(y))`, materialized back
/// into branch probabilities. Branches outside the subtree are unchanged.
fn reward_tilt(model: &TrajectoryModel, reward: &dyn TrajectoryReward, beta: f64) -> Result<TrajectoryModel> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidIntervention(format!("tilt beta must be finite and non-negative, got {beta}")));
    }
    let prompt = reward.prompt();
    let trajectories = model.enumerate_trajectories(prompt).map_err(|e| match e {
        Error::NotEnumerable { .. } => Error::InvalidIntervention(format!("reward tilt needs an enumerable model: {e}")),
        other => other,
    })?;
    let mut log_weights = Vec::with_capacity(trajectories.len());
    for t in &trajectories {
        log_weights.push(t.log_prob + beta * reward.reward(&t.string)?);
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // Tilted mass of every string in the subtree.
    let mut mass: BTreeMap<TokenString, CompensatedSum> = BTreeMap::new();
    for (t, lw) in trajectories.iter().zip(&log_weights) {
        let w = (lw - max).exp();
        for k in prompt.len()..=t.string.len() {
            mass.entry(t.string.prefix(k)).or_default().add(w);
        }
    }
    let mass_of = |s: &TokenString| mass.get(s).map_or(0.0, CompensatedSum::value);

    let alphabet = model.alphabet();
    let mut branches = model.branches().clone();
    for (prefix, row) in branches.iter_mut() {
        if !prompt.is_prefix_of(prefix) {
            continue;
        }
        let total = mass_of(prefix);
        if !(total > 0.0) {
            continue;
        }
        for (i, p) in row.iter_mut().enumerate() {
            *p = mass_of(&prefix.child(alphabet.outcome(i))) / total;
        }
    }
    TrajectoryModel::new(model.alphabet_arc().clone(), model.max_len(), branches)
}
