use serde::{Deserialize, Serialize};

use super::deviance_stats;
use crate::cores::{core_entropy, system_core, LogBase};
use crate::error::{Error, Result};
use crate::model::{TokenString, TrajectoryModel};
use crate::structures::{DiffMetric, System};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub core: Vec<f64>,
    pub expected_deviance: f64,
    pub deviance_variance: f64,
    /// `None` when the core is all zero.
    pub core_entropy: Option<f64>,
}

/// Before/after comparison of two snapshots of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogenizationReport {
    pub before: SnapshotStats,
    pub after: SnapshotStats,
    pub delta_expected: f64,
    pub delta_variance: f64,
    pub delta_entropy: Option<f64>,
    /// Every defined delta is ≤ 0 and at least one is < 0.
    pub homogenizing: bool,
    pub warnings: Vec<String>,
}

fn snapshot(
    model: &TrajectoryModel,
    prompt: &TokenString,
    system: &System,
    m: DiffMetric,
    base: LogBase,
) -> Result<SnapshotStats> {
    let stats = deviance_stats(model, prompt, system, m)?;
    let core = system_core(model, prompt, system)?.values;
    let core_entropy = match core_entropy(&core, base) {
        Ok(h) => Some(h),
        Err(Error::DegenerateCore) => None,
        Err(e) => return Err(e),
    };
    Ok(SnapshotStats { core, expected_deviance: stats.expected, deviance_variance: stats.variance, core_entropy })
}

pub fn homogenization_report(
    before: &TrajectoryModel,
    after: &TrajectoryModel,
    prompt: &TokenString,
    system: &System,
    m: DiffMetric,
    base: LogBase,
) -> Result<HomogenizationReport> {
    if before.alphabet() != after.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let a = snapshot(before, prompt, system, m, base)?;
    let b = snapshot(after, prompt, system, m, base)?;
    let mut warnings = Vec::new();
    for (label, s) in [("before", &a), ("after", &b)] {
        if s.core_entropy.is_none() {
            warnings.push(format!("{label}: core is all zero, entropy undefined"));
        }
    }
    let delta_expected = b.expected_deviance - a.expected_deviance;
    let delta_variance = b.deviance_variance - a.deviance_variance;
    let delta_entropy = a.core_entropy.zip(b.core_entropy).map(|(x, y)| y - x);
    let deltas: Vec<f64> = [Some(delta_expected), Some(delta_variance), delta_entropy].into_iter().flatten().collect();
    let homogenizing = deltas.iter().all(|d| *d <= 0.0) && deltas.iter().any(|d| *d < 0.0);
    Ok(HomogenizationReport { before: a, after: b, delta_expected, delta_variance, delta_entropy, homogenizing, warnings })
}
