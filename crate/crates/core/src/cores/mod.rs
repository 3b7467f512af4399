//! Expected compliance (cores): exact by enumeration or estimated by Monte
//! Carlo, plus normalization, core entropy, structure rankings and the
//! escort power-mean generalization.

mod escort;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use escort::{generalized_core, generalized_core_from, EscortParams};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{stream_rng, NextTokenSource, TokenString, Trajectory, TrajectoryModel};
use crate::numeric::CompensatedSum;
use crate::structures::{ComplianceVector, Structure, System};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    MonteCarlo { samples: usize, std_error: Vec<f64> },
}

/// Expected system compliance under a prompted (possibly intervened) model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreVector {
    pub values: Vec<f64>,
    pub provenance: Provenance,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervention: Option<String>,
}

impl CoreVector {
    /// An exact core with no recorded prompt; used for cores given directly.
    pub fn exact(values: Vec<f64>) -> Self {
        Self { values, provenance: Provenance::Exact, prompt: String::new(), intervention: None }
    }

    pub fn with_intervention(mut self, name: impl Into<String>) -> Self {
        self.intervention = Some(name.into());
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.provenance, Provenance::Exact)
    }
}

/// Trajectories of a prompt together with their compliance vectors.
#[derive(Clone, Debug)]
pub struct Evaluated {
    pub trajectories: Vec<Trajectory>,
    pub compliances: Vec<ComplianceVector>,
}

impl Evaluated {
    /// Enumerates `Str_⊤(prompt)` and evaluates `system` on every
    /// trajectory. A terminal prompt is its own sole trajectory.
    pub fn new(model: &TrajectoryModel, prompt: &TokenString, system: &System, exec: Exec) -> Result<Self> {
        let trajectories = if prompt.is_terminal() {
            vec![Trajectory { string: prompt.clone(), prob: 1.0, log_prob: 0.0 }]
        } else {
            model.enumerate_trajectories(prompt)?
        };
        let compliances = exec.try_map_slice(&trajectories, |t| system.evaluate(&t.string))?;
        Ok(Self { trajectories, compliances })
    }

    /// Probability-weighted mean of the compliance vectors, summed in
    /// enumeration order.
    pub fn core_values(&self) -> Vec<f64> {
        let n = self.compliances.first().map_or(0, |c| c.len());
        (0..n)
            .map(|i| {
                let total: CompensatedSum =
                    self.trajectories.iter().zip(&self.compliances).map(|(t, c)| t.prob * c[i]).collect();
                total.value().clamp(0.0, 1.0)
            })
            .collect()
    }

    pub fn core(&self, model: &TrajectoryModel, prompt: &TokenString) -> CoreVector {
        CoreVector {
            values: self.core_values(),
            provenance: Provenance::Exact,
            prompt: model.render(prompt),
            intervention: None,
        }
    }
}

pub fn structure_core(model: &TrajectoryModel, prompt: &TokenString, s: &Structure) -> Result<f64> {
    let system = System::singleton(s.clone());
    Ok(system_core(model, prompt, &system)?.values[0])
}

/// `Σ_y p(y | prompt) Λ(y)` over the enumerated trajectories of `prompt`.
pub fn system_core(model: &TrajectoryModel, prompt: &TokenString, system: &System) -> Result<CoreVector> {
    system_core_with(model, prompt, system, Exec::default())
}

pub fn system_core_with(
    model: &TrajectoryModel,
    prompt: &TokenString,
    system: &System,
    exec: Exec,
) -> Result<CoreVector> {
    Ok(Evaluated::new(model, prompt, system, exec)?.core(model, prompt))
}

/// Sample mean of `Λ(y)` over `samples` ancestral draws with per-component
/// standard errors. Draw `i` uses seed stream `i`.
pub fn estimate_core_mc<S: NextTokenSource + ?Sized>(
    source: &S,
    prompt: &TokenString,
    system: &System,
    samples: usize,
    seed: u64,
) -> Result<CoreVector> {
    estimate_core_mc_with(source, prompt, system, samples, seed, Exec::default())
}

pub fn estimate_core_mc_with<S: NextTokenSource + ?Sized>(
    source: &S,
    prompt: &TokenString,
    system: &System,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<CoreVector> {
    let draws = mc_compliances(source, prompt, system, samples, seed, exec)?;
    let (values, std_error) = mean_and_std_error(&draws, system.len());
    Ok(CoreVector {
        values,
        provenance: Provenance::MonteCarlo { samples, std_error },
        prompt: source.alphabet().render(prompt),
        intervention: None,
    })
}

pub(crate) fn mc_compliances<S: NextTokenSource + ?Sized>(
    source: &S,
    prompt: &TokenString,
    system: &System,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<(TokenString, ComplianceVector)>> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("Monte Carlo needs at least 2 samples, got {samples}")));
    }
    exec.try_map_range(samples, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let y = crate::model::sample_with(source, prompt, &mut rng)?;
        let c = system.evaluate(&y)?;
        Ok((y, c))
    })
}

fn mean_and_std_error(draws: &[(TokenString, ComplianceVector)], n: usize) -> (Vec<f64>, Vec<f64>) {
    let count = draws.len() as f64;
    let mut means = Vec::with_capacity(n);
    let mut errors = Vec::with_capacity(n);
    for i in 0..n {
        let mean = crate::numeric::sum(draws.iter().map(|(_, c)| c[i])) / count;
        let ss = crate::numeric::sum(draws.iter().map(|(_, c)| (c[i] - mean).powi(2)));
        means.push(mean.clamp(0.0, 1.0));
        errors.push((ss / (count - 1.0) / count).sqrt());
    }
    (means, errors)
}

/// Components divided by their sum.
pub fn normalized_core(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyVector);
    }
    let total = crate::numeric::sum(values.iter().copied());
    if !(total > 0.0) {
        return Err(Error::DegenerateCore);
    }
    Ok(values.iter().map(|v| v / total).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Base2,
}

impl LogBase {
    pub fn ln_base(self) -> f64 {
        match self {
            LogBase::Natural => 1.0,
            LogBase::Base2 => std::f64::consts::LN_2,
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogBase::Natural => "natural",
            LogBase::Base2 => "base2",
        })
    }
}

/// Shannon entropy of the normalized core, `0 · log 0 = 0`.
pub fn core_entropy(values: &[f64], base: LogBase) -> Result<f64> {
    let p = normalized_core(values)?;
    let h = -crate::numeric::sum(p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()));
    let max = (values.len() as f64).ln();
    // A point mass gives −0 from the negated sum.
    if h <= 0.0 {
        return Ok(0.0);
    }
    Ok(h.min(max) / base.ln_base())
}

/// Groups of indices in ascending order of value; equal values share a
/// group and indices inside a group stay ascending.
pub fn preorder_groups(values: &[f64]) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match groups.last_mut() {
            Some(g) if values[g[0]] == values[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Structures ranked by core value, least complied-with first.
pub fn rank_structures(core: &[f64]) -> Vec<Vec<usize>> {
    preorder_groups(core)
}
