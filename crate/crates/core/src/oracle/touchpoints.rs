use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::brute::{brute_force_expectation, exact_distribution};
use crate::cores::{structure_core, system_core};
use crate::error::{Error, Result};
use crate::model::{Alphabet, Next, TokenString, TrajectoryModel};
use crate::orientation::{deviance_stats, DevianceStats};
use crate::structures::{DiffMetric, Structure, System};

/// Trajectories designated valid; the rest of the support is the error set.
#[derive(Clone, Debug, PartialEq)]
pub struct ValiditySet {
    valid: BTreeSet<TokenString>,
}

impl ValiditySet {
    /// Every member must be a trajectory of `model` from the root.
    pub fn new(model: &TrajectoryModel, valid: impl IntoIterator<Item = TokenString>) -> Result<Self> {
        let universe: BTreeSet<TokenString> = model
            .enumerate_trajectories(&TokenString::root())?
            .into_iter()
            .map(|t| t.string)
            .collect();
        let valid: BTreeSet<TokenString> = valid.into_iter().collect();
        if let Some(bad) = valid.iter().find(|y| !universe.contains(*y)) {
            return Err(Error::InvalidArgument(format!("'{}' is not a trajectory of the model", model.render(bad))));
        }
        Ok(Self { valid })
    }

    pub fn members(&self) -> &BTreeSet<TokenString> {
        &self.valid
    }
}

/// An explicit finite language of terminal strings.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageSet {
    members: BTreeSet<TokenString>,
}

impl LanguageSet {
    pub fn new(members: impl IntoIterator<Item = TokenString>) -> Result<Self> {
        let members: BTreeSet<TokenString> = members.into_iter().collect();
        if members.iter().any(|y| !y.is_terminal()) {
            return Err(Error::InvalidArgument("language members must be terminal strings".into()));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &BTreeSet<TokenString> {
        &self.members
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GiniSimpson {
    pub mu: f64,
    pub e_abs: f64,
    pub var_alpha: f64,
    pub gs: f64,
}

impl GiniSimpson {
    /// `E[|α−μ|] = GS` and `Var[α] = GS/2` within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        (self.e_abs - self.gs).abs() <= tol && (self.var_alpha - self.gs / 2.0).abs() <= tol
    }
}

/// Two-leaf model with `p(a) = μ` and the binary structure `has_a`.
pub fn two_leaf_model(mu: f64) -> Result<(TrajectoryModel, System)> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidArgument(format!("mu must lie in [0, 1], got {mu}")));
    }
    let alphabet = Arc::new(Alphabet::new(["a", "b"])?);
    let leaf = |t: u32| TokenString::root().child(Next::Token(t));
    let branches = BTreeMap::from([
        (TokenString::root(), vec![mu, 1.0 - mu, 0.0]),
        (leaf(0), vec![0.0, 0.0, 1.0]),
        (leaf(1), vec![0.0, 0.0, 1.0]),
    ]);
    let model = TrajectoryModel::new(alphabet, 2, branches)?;
    Ok((model, System::singleton(Structure::token_indicator("has_a", 0))))
}

/// Expected absolute deviance from the deviance statistics and `Var[α]` by
/// brute force, against `GS = 2μ(1−μ)`.
pub fn gini_simpson_check(mu: f64) -> Result<GiniSimpson> {
    let (model, system) = two_leaf_model(mu)?;
    let root = TokenString::root();
    let e_abs = deviance_stats(&model, &root, &system, DiffMetric::AbsMean)?.expected;
    let alpha = &system.structures()[0];
    let mean = brute_force_expectation(&model, &root, |y| alpha.evaluate(y))?;
    let var_alpha = brute_force_expectation(&model, &root, |y| Ok((alpha.evaluate(y)? - mean).powi(2)))?;
    Ok(GiniSimpson { mu, e_abs, var_alpha, gs: 2.0 * mu * (1.0 - mu) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IivResult {
    /// Core of the validity membership structure.
    pub core: f64,
    /// Probability mass outside the valid set.
    pub err: f64,
    /// `core = 1 − err` holds in exact rational arithmetic and the float
    /// core matches the rational one within 1e-12.
    pub exact: bool,
}

pub fn iiv_check(model: &TrajectoryModel, vs: &ValiditySet) -> Result<IivResult> {
    let root = TokenString::root();
    let iiv = Structure::membership("is_it_valid", vs.members().iter().cloned());
    let core = structure_core(model, &root, &iiv)?;
    let mut err_exact = BigRational::zero();
    let mut core_exact = BigRational::zero();
    for (y, p) in exact_distribution(model, &root)? {
        if vs.members().contains(&y) {
            core_exact += &p;
        } else {
            err_exact += p;
        }
    }
    let exact = core_exact == BigRational::one() - &err_exact
        && (core - super::brute::rational_to_f64(&core_exact)).abs() <= 1e-12;
    Ok(IivResult { core, err: super::brute::rational_to_f64(&err_exact), exact })
}

/// `(consistent, breadth)`: `⟨α_K⟩ = 1` in exact arithmetic (the support
/// lies inside `K`), and `K` lies inside the support.
pub fn consistency_breadth_check(model: &TrajectoryModel, k: &LanguageSet) -> Result<(bool, bool)> {
    let distribution = exact_distribution(model, &TokenString::root())?;
    let mut core_k = BigRational::zero();
    for (y, p) in &distribution {
        if k.members().contains(y) {
            core_k += p;
        }
    }
    let support: BTreeSet<TokenString> = distribution.into_iter().map(|(y, _)| y).collect();
    Ok((core_k.is_one(), k.members().is_subset(&support)))
}

/// Largest gap in `⟨Λ⟩(x) = Σ_c p(c | x)·⟨Λ⟩(x·c)` over every prefix.
pub fn total_expectation_gap(model: &TrajectoryModel, system: &System) -> Result<f64> {
    let alphabet = model.alphabet();
    let mut worst = 0.0f64;
    for prefix in model.prefixes() {
        let row = model.branch(prefix).expect("prefix has a branch");
        let parent = system_core(model, prefix, system)?.values;
        let mut recomposed = vec![0.0; system.len()];
        for (i, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let child = system_core(model, &prefix.child(alphabet.outcome(i)), system)?.values;
            for (acc, c) in recomposed.iter_mut().zip(child) {
                *acc += p * c;
            }
        }
        for (a, b) in parent.iter().zip(&recomposed) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Largest gap between the exact core and the brute-force oracle over every
/// structure, plus whether the rational oracle agrees after rounding.
pub fn oracle_gap(model: &TrajectoryModel, system: &System) -> Result<(f64, bool)> {
    let root = TokenString::root();
    let core = system_core(model, &root, system)?.values;
    let mut worst = 0.0f64;
    let mut exact = true;
    for (s, c) in system.structures().iter().zip(&core) {
        let float = brute_force_expectation(model, &root, |y| s.evaluate(y))?;
        let rational = super::brute::brute_force_expectation_exact(model, &root, |y| s.evaluate(y))?;
        worst = worst.max((c - float).abs());
        exact &= (c - super::brute::rational_to_f64(&rational)).abs() <= 1e-12;
    }
    Ok((worst, exact))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeHomogenization {
    pub core_k_before: f64,
    pub core_k_after: f64,
    pub stats_before: DevianceStats,
    pub stats_after: DevianceStats,
}

/// Pushing `⟨α_K⟩` to 1 leaves the deviance statistics of an independent
/// structure unchanged. First token picks `k` or `j`, second picks `y` or
/// `z` independently; `K` is "contains k", the independent structure is
/// "contains y".
pub fn structure_relative_homogenization() -> Result<RelativeHomogenization> {
    let alphabet = Arc::new(Alphabet::new(["k", "j", "y", "z"])?);
    let build = |p_k: f64| -> Result<TrajectoryModel> {
        let mut branches = BTreeMap::new();
        branches.insert(TokenString::root(), vec![p_k, 1.0 - p_k, 0.0, 0.0, 0.0]);
        for first in [0u32, 1] {
            let x = TokenString::root().child(Next::Token(first));
            branches.insert(x.clone(), vec![0.0, 0.0, 0.25, 0.75, 0.0]);
            for second in [2u32, 3] {
                branches.insert(x.child(Next::Token(second)), vec![0.0, 0.0, 0.0, 0.0, 1.0]);
            }
        }
        TrajectoryModel::new(alphabet.clone(), 3, branches)
    };
    let (before, after) = (build(0.5)?, build(1.0)?);
    let root = TokenString::root();
    let k = Structure::token_indicator("in_k", 0);
    let m = System::singleton(Structure::token_indicator("has_y", 2));
    Ok(RelativeHomogenization {
        core_k_before: structure_core(&before, &root, &k)?,
        core_k_after: structure_core(&after, &root, &k)?,
        stats_before: deviance_stats(&before, &root, &m, DiffMetric::L2norm)?,
        stats_after: deviance_stats(&after, &root, &m, DiffMetric::L2norm)?,
    })
}
