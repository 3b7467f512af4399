//! Finite autoregressive trajectory-tree models: loading, validation,
//! enumeration, sampling and interventions.

pub mod fixtures;
mod intervention;
mod sampling;
mod string;
mod tree;

pub use intervention::{
    apply_intervention, Intervention, InterventionSpec, Transform, TrajectoryReward, TransformSpec,
};
pub use sampling::{
    draw_index, sample_trajectories, sample_trajectory, sample_with, stream_rng, CallbackSource,
    NextTokenSource,
};
pub use string::{Alphabet, Next, Rendered, TokenId, TokenString, DEFAULT_BOS, DEFAULT_EOS};
pub use tree::{
    branches_close, ModelSpec, Trajectory, TrajectoryModel, DEFAULT_ENUMERATION_LIMIT,
    PROBABILITY_TOLERANCE,
};
