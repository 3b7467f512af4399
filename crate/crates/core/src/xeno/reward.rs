use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ConstraintSystems, ScoreConfig};
use crate::cores::Evaluated;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{draw_index, sample_with, stream_rng, NextTokenSource, TokenString, TrajectoryModel, TrajectoryReward};
use crate::numeric::{log_sum_exp, sum};
use crate::structures::{DiffMetric, System};

pub const FAIRNESS_EPSILON: f64 = 1e-6;

/// Trajectory-level reward bound to a prompt and the baseline model's
/// prompted cores.
#[derive(Clone, Debug)]
pub struct RewardSpec {
    system: System,
    constraints: ConstraintSystems,
    prompt: TokenString,
    core: Vec<f64>,
    conserve_core: Option<Vec<f64>>,
    fairness_weights: Vec<f64>,
    metric: DiffMetric,
    lambda: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardComponents {
    pub r_d: f64,
    pub r_f: f64,
    pub r_c: f64,
}

impl RewardSpec {
    pub fn new(
        model: &TrajectoryModel,
        prompt: &TokenString,
        system: System,
        constraints: ConstraintSystems,
        cfg: &ScoreConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let core = Evaluated::new(model, prompt, &system, Exec::default())?.core_values();
        let conserve_core = constraints
            .conserve
            .as_ref()
            .map(|s| Evaluated::new(model, prompt, s, Exec::default()).map(|e| e.core_values()))
            .transpose()?;
        let inverse: Vec<f64> = core.iter().map(|c| 1.0 / (c + FAIRNESS_EPSILON)).collect();
        let total = sum(inverse.iter().copied());
        let fairness_weights = inverse.iter().map(|v| v / total).collect();
        Ok(Self {
            system,
            constraints,
            prompt: prompt.clone(),
            core,
            conserve_core,
            fairness_weights,
            metric: cfg.metric,
            lambda: [cfg.lambda_d, cfg.lambda_f, cfg.lambda_c],
        })
    }

    pub fn core(&self) -> &[f64] {
        &self.core
    }

    pub fn fairness_weights(&self) -> &[f64] {
        &self.fairness_weights
    }

    pub fn components(&self, y: &TokenString) -> Result<RewardComponents> {
        trajectory_rewards(y, self)
    }
}

/// `(r_d, r_f, r_c)` of a trajectory of the spec's prompt.
pub fn trajectory_rewards(y: &TokenString, spec: &RewardSpec) -> Result<RewardComponents> {
    if !spec.prompt.is_prefix_of(y) || !y.is_terminal() {
        return Err(Error::InvalidArgument("reward needs a trajectory extending the prompt".into()));
    }
    let v = spec.system.evaluate(y)?;
    let r_d = spec.metric.distance(&v, &spec.core)?;
    let r_f = sum(spec.fairness_weights.iter().zip(v.iter()).map(|(w, a)| w * a));
    let total = |s: &Option<System>| -> Result<f64> {
        Ok(s.as_ref().map(|s| s.evaluate(y)).transpose()?.map_or(0.0, |c| sum(c.iter().copied())))
    };
    let mut r_c = total(&spec.constraints.target)? - total(&spec.constraints.avoid)?;
    if let (Some(s), Some(core)) = (&spec.constraints.conserve, &spec.conserve_core) {
        r_c -= sum(s.evaluate(y)?.iter().zip(core).map(|(a, c)| (a - c).abs()));
    }
    Ok(RewardComponents { r_d, r_f, r_c })
}

/// `r_χ = λ_d·r_d + λ_f·r_f + λ_c·r_c`.
pub fn stay_reward(y: &TokenString, spec: &RewardSpec) -> Result<f64> {
    let r = trajectory_rewards(y, spec)?;
    let [ld, lf, lc] = spec.lambda;
    Ok(ld * r.r_d + lf * r.r_f + lc * r.r_c)
}

impl TrajectoryReward for RewardSpec {
    fn prompt(&self) -> &TokenString {
        &self.prompt
    }

    fn reward(&self, y: &TokenString) -> Result<f64> {
        stay_reward(y, self)
    }
}

/// Trajectories of a prompt with baseline and tilted probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct TiltedDistribution {
    pub strings: Vec<TokenString>,
    pub baseline: Vec<f64>,
    pub rewards: Vec<f64>,
    pub probs: Vec<f64>,
}

/// `p(y) ∝ p(y | prompt)·exp(β·r(y))`, normalized in log space. `β = 0`
/// returns the baseline probabilities unchanged.
pub fn tilt_by_rewards(probs: &[f64], rewards: &[f64], beta: f64) -> Result<Vec<f64>> {
    if probs.len() != rewards.len() {
        return Err(Error::DimensionMismatch { expected: probs.len(), found: rewards.len() });
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("tilt beta must be finite and non-negative, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(probs.to_vec());
    }
    let logits: Vec<f64> = probs.iter().zip(rewards).map(|(p, r)| p.ln() + beta * r).collect();
    let log_z = log_sum_exp(&logits);
    if !log_z.is_finite() {
        return Err(Error::InvalidArgument("tilted weights have no finite normalizer".into()));
    }
    Ok(logits.iter().map(|l| (l - log_z).exp()).collect())
}

pub fn tilted_distribution(
    model: &TrajectoryModel,
    reward: &dyn TrajectoryReward,
    beta: f64,
) -> Result<TiltedDistribution> {
    tilted_distribution_with(model, reward, beta, Exec::default())
}

pub fn tilted_distribution_with(
    model: &TrajectoryModel,
    reward: &dyn TrajectoryReward,
    beta: f64,
    exec: Exec,
) -> Result<TiltedDistribution> {
    let trajectories = model.enumerate_trajectories(reward.prompt())?;
    let rewards = exec.try_map_slice(&trajectories, |t| reward.reward(&t.string))?;
    let baseline: Vec<f64> = trajectories.iter().map(|t| t.prob).collect();
    let probs = tilt_by_rewards(&baseline, &rewards, beta)?;
    Ok(TiltedDistribution { strings: trajectories.into_iter().map(|t| t.string).collect(), baseline, rewards, probs })
}

/// `count` indices into `dist.strings`; draw `i` uses seed stream `i`.
pub fn sample_tilted(dist: &TiltedDistribution, count: usize, seed: u64, exec: Exec) -> Result<Vec<usize>> {
    exec.try_map_range(count, |i| {
        let u = stream_rng(seed, i as u64).gen::<f64>();
        draw_index(&dist.probs, u).ok_or_else(|| Error::NotNormalized("tilted distribution has no mass".into()))
    })
}

/// Self-normalized importance sample of the tilted distribution using the
/// baseline as proposal.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceSample {
    pub proposals: Vec<TokenString>,
    pub rewards: Vec<f64>,
    /// Normalized importance weights.
    pub weights: Vec<f64>,
    pub effective_sample_size: f64,
}

impl ImportanceSample {
    /// `count` draws from the weighted proposals; draw `i` uses stream `i`
    /// of `seed`.
    pub fn resample(&self, count: usize, seed: u64) -> Result<Vec<usize>> {
        (0..count)
            .map(|i| {
                let u = stream_rng(seed, i as u64).gen::<f64>();
                draw_index(&self.weights, u).ok_or_else(|| Error::NotNormalized("importance weights".into()))
            })
            .collect()
    }
}

/// Proposal `i` uses stream `i` of `seed`.
pub fn snis_tilted<S: NextTokenSource + ?Sized>(
    source: &S,
    reward: &dyn TrajectoryReward,
    beta: f64,
    proposals: usize,
    seed: u64,
    exec: Exec,
) -> Result<ImportanceSample> {
    if proposals == 0 {
        return Err(Error::InvalidArgument("importance sampling needs at least one proposal".into()));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("tilt beta must be finite and non-negative, got {beta}")));
    }
    let draws = exec.try_map_range(proposals, |i| {
        let y = sample_with(source, reward.prompt(), &mut stream_rng(seed, i as u64))?;
        let r = reward.reward(&y)?;
        Ok::<_, Error>((y, r))
    })?;
    let (proposals, rewards): (Vec<_>, Vec<_>) = draws.into_iter().unzip();
    let logits: Vec<f64> = rewards.iter().map(|r| beta * r).collect();
    let log_z = log_sum_exp(&logits);
    let weights: Vec<f64> = logits.iter().map(|l| (l - log_z).exp()).collect();
    let effective_sample_size = 1.0 / sum(weights.iter().map(|w| w * w));
    Ok(ImportanceSample { proposals, rewards, weights, effective_sample_size })
}
