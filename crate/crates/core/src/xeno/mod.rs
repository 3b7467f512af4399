//! Xeno-reproduction: scoring and Boltzmann search over candidate
//! interventions, trajectory-level rewards with reward-tilted sampling, and
//! the diversity/fairness Pareto construction.

mod config;
mod pareto;
mod reward;
mod scores;
mod search;

pub use config::{ConstraintSpec, ConstraintSystems, ScoreConfig};
pub use pareto::{check_pareto_hypothesis, pareto_demo, ParetoReport, ParetoScores, PARETO_CONVENTIONS};
pub use reward::{
    sample_tilted, snis_tilted, stay_reward, tilt_by_rewards, tilted_distribution, tilted_distribution_with,
    trajectory_rewards, ImportanceSample, RewardComponents, RewardSpec, TiltedDistribution, FAIRNESS_EPSILON,
};
pub use scores::{
    constraint_score, diversity_score, fairness_score, intervention_score, relative_order_sign, score_candidates,
    score_diverge, score_explore, score_inverted, ScoreBreakdown,
};
pub use search::{boltzmann_weights, mixture_distribution, sample_intervention};
