//! Canonical desk-scale models and systems shipped with the crate.

use super::tree::TrajectoryModel;
use crate::structures::System;

pub const M1_JSON: &str = include_str!("../../fixtures/m1.json");
pub const M2_JSON: &str = include_str!("../../fixtures/m2.json");
pub const M3_JSON: &str = include_str!("../../fixtures/m3.json");
pub const S1_JSON: &str = include_str!("../../fixtures/s1.json");
pub const S2_JSON: &str = include_str!("../../fixtures/s2.json");

/// Symmetric two-leaf model: root `{a: 0.5, b: 0.5}`.
pub fn m1() -> TrajectoryModel {
    TrajectoryModel::from_json_str(M1_JSON).expect("fixture M1 is valid")
}

/// Skewed two-leaf model: root `{a: 0.25, b: 0.75}`.
pub fn m2() -> TrajectoryModel {
    TrajectoryModel::from_json_str(M2_JSON).expect("fixture M2 is valid")
}

/// Collapsed model: root `{b: 1}`.
pub fn m3() -> TrajectoryModel {
    TrajectoryModel::from_json_str(M3_JSON).expect("fixture M3 is valid")
}

/// `(has_a)` over the fixture alphabet.
pub fn s1(model: &TrajectoryModel) -> System {
    System::from_json_str(S1_JSON, model.alphabet_arc()).expect("fixture S1 is valid")
}

/// `(has_a, has_b)` over the fixture alphabet.
pub fn s2(model: &TrajectoryModel) -> System {
    System::from_json_str(S2_JSON, model.alphabet_arc()).expect("fixture S2 is valid")
}

pub fn all_models() -> [(&'static str, TrajectoryModel); 3] {
    [("M1", m1()), ("M2", m2()), ("M3", m3())]
}
