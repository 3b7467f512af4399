//! Orientations (per-structure non-normativity of a string), deviances and
//! their distributional statistics, plus the generalized deviance pairs,
//! per-prefix dynamics and the homogenization comparator.

mod dynamics;
mod generalized;
mod homogenization;

use serde::{Deserialize, Serialize};

pub use dynamics::{dynamics_trace, dynamics_trace_with, write_dynamics_csv, DynamicsState};
pub use generalized::{
    hill_deviances, hill_deviances_for, kl_divergence, renyi_relative_entropy, GeneralizedDeviance, HillPair,
    HillSide, Subtraction,
};
pub use homogenization::{homogenization_report, HomogenizationReport, SnapshotStats};

use crate::cores::{mc_compliances, preorder_groups, CoreVector, Evaluated, Provenance};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{NextTokenSource, TokenString, TrajectoryModel};
use crate::numeric::CompensatedSum;
use crate::structures::{DiffMetric, System};

/// `Λ(x) − ⟨Λ⟩`, tagged with the core it was measured against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationVector {
    pub values: Vec<f64>,
    pub reference: CoreVector,
}

impl OrientationVector {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

pub fn orientation(v: &[f64], core: &CoreVector) -> Result<OrientationVector> {
    if v.len() != core.values.len() {
        return Err(Error::DimensionMismatch { expected: core.values.len(), found: v.len() });
    }
    let values = v.iter().zip(&core.values).map(|(a, c)| (a - c).clamp(-1.0, 1.0)).collect();
    Ok(OrientationVector { values, reference: core.clone() })
}

pub fn deviance(o: &OrientationVector, m: DiffMetric) -> Result<f64> {
    m.norm(&o.values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DevianceStats {
    pub expected: f64,
    pub variance: f64,
    pub metric: DiffMetric,
    pub provenance: Provenance,
}

/// Exact `E[∂]` and `Var[∂]` over the trajectories of a non-terminal prompt.
pub fn deviance_stats(
    model: &TrajectoryModel,
    prompt: &TokenString,
    system: &System,
    m: DiffMetric,
) -> Result<DevianceStats> {
    deviance_stats_with(model, prompt, system, m, Exec::default())
}

pub fn deviance_stats_with(
    model: &TrajectoryModel,
    prompt: &TokenString,
    system: &System,
    m: DiffMetric,
    exec: Exec,
) -> Result<DevianceStats> {
    if prompt.is_terminal() {
        return Err(Error::DegeneratePrompt(format!("'{}' is terminal", model.render(prompt))));
    }
    let ev = Evaluated::new(model, prompt, system, exec)?;
    let core = ev.core_values();
    let devs = ev
        .compliances
        .iter()
        .map(|c| m.distance(c, &core))
        .collect::<Result<Vec<_>>>()?;
    let probs: Vec<f64> = ev.trajectories.iter().map(|t| t.prob).collect();
    let (expected, variance) = weighted_moments(&probs, &devs);
    Ok(DevianceStats { expected, variance, metric: m, provenance: Provenance::Exact })
}

/// Plug-in Monte Carlo estimate: the core is the sample mean of the same
/// draws. The reported standard error treats that core as fixed.
pub fn deviance_stats_mc<S: NextTokenSource + ?Sized>(
    source: &S,
    prompt: &TokenString,
    system: &System,
    m: DiffMetric,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<DevianceStats> {
    let draws = mc_compliances(source, prompt, system, samples, seed, exec)?;
    let count = draws.len() as f64;
    let core: Vec<f64> = (0..system.len())
        .map(|i| crate::numeric::sum(draws.iter().map(|(_, c)| c[i])) / count)
        .collect();
    let devs = draws.iter().map(|(_, c)| m.distance(c, &core)).collect::<Result<Vec<_>>>()?;
    let weights = vec![1.0 / count; draws.len()];
    let (expected, variance) = weighted_moments(&weights, &devs);
    let std_error = (variance * count / (count - 1.0) / count).sqrt();
    Ok(DevianceStats {
        expected,
        variance,
        metric: m,
        provenance: Provenance::MonteCarlo { samples, std_error: vec![std_error] },
    })
}

fn weighted_moments(weights: &[f64], values: &[f64]) -> (f64, f64) {
    let first: CompensatedSum = weights.iter().zip(values).map(|(w, d)| w * d).collect();
    let second: CompensatedSum = weights.iter().zip(values).map(|(w, d)| w * d * d).collect();
    let e = first.value().max(0.0);
    (e, (second.value() - e * e).max(0.0))
}

/// Strings ordered by prompted deviance, least deviant first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StringRanking {
    pub deviances: Vec<f64>,
    /// Indices into the input list; each group holds tied strings.
    pub groups: Vec<Vec<usize>>,
}

pub fn rank_strings(
    model: &TrajectoryModel,
    prompt: &TokenString,
    system: &System,
    m: DiffMetric,
    xs: &[TokenString],
) -> Result<StringRanking> {
    let core = crate::cores::system_core(model, prompt, system)?;
    let deviances = xs
        .iter()
        .map(|x| {
            if !prompt.is_prefix_of(x) {
                return Err(Error::NotExtension { string: model.render(x), prompt: model.render(prompt) });
            }
            deviance(&orientation(&system.evaluate(x)?, &core)?, m)
        })
        .collect::<Result<Vec<_>>>()?;
    let groups = preorder_groups(&deviances);
    Ok(StringRanking { deviances, groups })
}
