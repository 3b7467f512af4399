use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::config::{ConstraintSystems, ScoreConfig};
use super::search::boltzmann_weights;
use crate::cores::{core_entropy, system_core, CoreVector};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{apply_intervention, Intervention, TokenString, TrajectoryModel};
use crate::orientation::{deviance_stats, DevianceStats};
use crate::structures::{DiffMetric, System};

pub fn score_explore(core_w: &CoreVector, core_w0: &CoreVector, m: DiffMetric) -> Result<f64> {
    m.distance(&core_w.values, &core_w0.values)
}

pub fn score_diverge(stats: &DevianceStats, cfg: &ScoreConfig) -> f64 {
    cfg.lambda_e * stats.expected + cfg.lambda_var * stats.variance
}

/// Sign of `core[i] − core[j]`; equal components give `Equal`.
pub fn relative_order_sign(core: &[f64], i: usize, j: usize) -> Result<Ordering> {
    if i == j {
        return Err(Error::InvalidArgument("relative order needs two distinct structures".into()));
    }
    let n = core.len();
    if i >= n || j >= n {
        return Err(Error::InvalidArgument(format!("structure index out of range for {n} structures")));
    }
    Ok(core[i].total_cmp(&core[j]))
}

/// Fraction of unordered structure pairs whose relative-order sign differs
/// between the two cores. A tie differs from either strict sign.
pub fn score_inverted(core_w: &[f64], core_w0: &[f64]) -> Result<f64> {
    if core_w.len() != core_w0.len() {
        return Err(Error::DimensionMismatch { expected: core_w0.len(), found: core_w.len() });
    }
    let n = core_w.len();
    if n < 2 {
        return Err(Error::InvalidArgument("invertedness needs at least two structures".into()));
    }
    let mut flipped = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if relative_order_sign(core_w, i, j)? != relative_order_sign(core_w0, i, j)? {
                flipped += 1;
            }
        }
    }
    Ok(flipped as f64 / (n * (n - 1) / 2) as f64)
}

/// `ρ_d`: explore against the baseline core plus the candidate's own diverge.
pub fn diversity_score(
    model_w: &TrajectoryModel,
    model_w0: &TrajectoryModel,
    prompt: &TokenString,
    system: &System,
    cfg: &ScoreConfig,
) -> Result<f64> {
    let w = Snapshot::new(model_w, prompt, system, None, cfg)?;
    let w0 = Snapshot::new(model_w0, prompt, system, None, cfg)?;
    Ok(breakdown(&w, &w0, &ConstraintSystems::default(), cfg)?.rho_d)
}

/// `ρ_f` with a warning when the entropy term is undefined and omitted.
pub fn fairness_score(
    model_w: &TrajectoryModel,
    model_w0: &TrajectoryModel,
    prompt: &TokenString,
    system: &System,
    cfg: &ScoreConfig,
) -> Result<(f64, Option<String>)> {
    let core_w = system_core(model_w, prompt, system)?;
    let core_w0 = system_core(model_w0, prompt, system)?;
    let (rho_f, even, _) = fairness_terms(&core_w.values, &core_w0.values, cfg)?;
    Ok((rho_f, even.is_none().then(|| DEGENERATE_WARNING.to_owned())))
}

const DEGENERATE_WARNING: &str = "core is all zero; entropy term omitted";

fn fairness_terms(core_w: &[f64], core_w0: &[f64], cfg: &ScoreConfig) -> Result<(f64, Option<f64>, f64)> {
    let even = match core_entropy(core_w, cfg.log_base) {
        Ok(h) => Some(h),
        Err(Error::DegenerateCore) => None,
        Err(e) => return Err(e),
    };
    let inverted = score_inverted(core_w, core_w0)?;
    Ok((cfg.lambda_f0 * even.unwrap_or(0.0) + cfg.lambda_f1 * inverted, even, inverted))
}

/// `ρ_c`; empty roles contribute zero.
pub fn constraint_score(
    model_w: &TrajectoryModel,
    model_w0: &TrajectoryModel,
    prompt: &TokenString,
    cs: &ConstraintSystems,
    cfg: &ScoreConfig,
) -> Result<f64> {
    let w = ConstraintCores::new(model_w, prompt, cs)?;
    let w0 = ConstraintCores::new(model_w0, prompt, cs)?;
    w.score(&w0, cfg)
}

#[derive(Clone, Debug, Default)]
struct ConstraintCores {
    target: Option<Vec<f64>>,
    avoid: Option<Vec<f64>>,
    conserve: Option<Vec<f64>>,
}

impl ConstraintCores {
    fn new(model: &TrajectoryModel, prompt: &TokenString, cs: &ConstraintSystems) -> Result<Self> {
        let core = |s: &Option<System>| -> Result<Option<Vec<f64>>> {
            s.as_ref().map(|s| system_core(model, prompt, s).map(|c| c.values)).transpose()
        };
        Ok(Self { target: core(&cs.target)?, avoid: core(&cs.avoid)?, conserve: core(&cs.conserve)? })
    }

    fn score(&self, baseline: &Self, cfg: &ScoreConfig) -> Result<f64> {
        let agg = |v: &Option<Vec<f64>>| v.as_deref().map_or(Ok(0.0), |v| cfg.aggregator.apply(v));
        let drift = match (&self.conserve, &baseline.conserve) {
            (Some(a), Some(b)) => cfg.metric.distance(a, b)?,
            _ => 0.0,
        };
        Ok(cfg.lambda_c0 * agg(&self.target)? - cfg.lambda_c1 * agg(&self.avoid)? - cfg.lambda_c2 * drift)
    }
}

/// Everything a score needs from one model.
struct Snapshot {
    core: CoreVector,
    stats: DevianceStats,
    constraints: ConstraintCores,
}

impl Snapshot {
    fn new(
        model: &TrajectoryModel,
        prompt: &TokenString,
        system: &System,
        cs: Option<&ConstraintSystems>,
        cfg: &ScoreConfig,
    ) -> Result<Self> {
        Ok(Self {
            core: system_core(model, prompt, system)?,
            stats: deviance_stats(model, prompt, system, cfg.metric)?,
            constraints: cs.map(|cs| ConstraintCores::new(model, prompt, cs)).transpose()?.unwrap_or_default(),
        })
    }
}

/// Per-candidate score components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub name: String,
    pub core: Vec<f64>,
    pub score_explore: f64,
    pub score_diverge: f64,
    pub rho_d: f64,
    /// `None` when the core is all zero.
    pub score_even: Option<f64>,
    pub score_inverted: f64,
    pub rho_f: f64,
    pub rho_c: f64,
    pub rho_chi: f64,
    /// Boltzmann weight among the scored candidates.
    pub pi: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn breakdown(w: &Snapshot, w0: &Snapshot, cs: &ConstraintSystems, cfg: &ScoreConfig) -> Result<ScoreBreakdown> {
    let explore = score_explore(&w.core, &w0.core, cfg.metric)?;
    let diverge = score_diverge(&w.stats, cfg);
    let rho_d = cfg.lambda_d0 * explore + cfg.lambda_d1 * diverge;
    let (rho_f, even, inverted) = fairness_terms(&w.core.values, &w0.core.values, cfg)?;
    let rho_c = w.constraints.score(&w0.constraints, cfg)?;
    let mut warnings = Vec::new();
    if even.is_none() {
        warnings.push(DEGENERATE_WARNING.to_owned());
    }
    if cfg.lambda_c > 0.0 && cs.is_empty() {
        warnings.push("lambda_c > 0 but no constraint systems given; rho_c = 0".to_owned());
    }
    Ok(ScoreBreakdown {
        name: String::new(),
        core: w.core.values.clone(),
        score_explore: explore,
        score_diverge: diverge,
        rho_d,
        score_even: even,
        score_inverted: inverted,
        rho_f,
        rho_c,
        rho_chi: cfg.lambda_d * rho_d + cfg.lambda_f * rho_f + cfg.lambda_c * rho_c,
        pi: 1.0,
        warnings,
    })
}

/// `ρ_χ` of `model_w` against `model_w0`, with its components.
pub fn intervention_score(
    model_w: &TrajectoryModel,
    model_w0: &TrajectoryModel,
    prompt: &TokenString,
    system: &System,
    cs: &ConstraintSystems,
    cfg: &ScoreConfig,
) -> Result<ScoreBreakdown> {
    cfg.validate()?;
    let w = Snapshot::new(model_w, prompt, system, Some(cs), cfg)?;
    let w0 = Snapshot::new(model_w0, prompt, system, Some(cs), cfg)?;
    breakdown(&w, &w0, cs, cfg)
}

/// Scores every candidate against the baseline, concurrently under
/// `exec`, and attaches Boltzmann weights at `cfg.beta_rho`.
pub fn score_candidates(
    baseline: &TrajectoryModel,
    prompt: &TokenString,
    system: &System,
    cs: &ConstraintSystems,
    candidates: &[Intervention],
    cfg: &ScoreConfig,
    exec: Exec,
) -> Result<Vec<ScoreBreakdown>> {
    cfg.validate()?;
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate interventions".into()));
    }
    let w0 = Snapshot::new(baseline, prompt, system, Some(cs), cfg)?;
    let mut scored = exec.try_map_slice(candidates, |w| {
        let model_w = apply_intervention(baseline, w)?;
        let snap = Snapshot::new(&model_w, prompt, system, Some(cs), cfg)?;
        let mut b = breakdown(&snap, &w0, cs, cfg)?;
        b.name = w.name.clone();
        Ok::<_, Error>(b)
    })?;
    let rho: Vec<f64> = scored.iter().map(|b| b.rho_chi).collect();
    for (b, pi) in scored.iter_mut().zip(boltzmann_weights(&rho, cfg.beta_rho)?) {
        b.pi = pi;
    }
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cores::Provenance;
    use crate::model::{fixtures, Transform};
    use crate::structures::{Aggregator, Structure};

    fn cfg() -> ScoreConfig {
        ScoreConfig::default()
    }

    #[test]
    fn explore_examples() {
        let a = CoreVector::exact(vec![0.75, 0.25]);
        let b = CoreVector::exact(vec![0.25, 0.75]);
        assert_eq!(score_explore(&a, &b, DiffMetric::L2norm).unwrap(), 0.5);
        assert_eq!(score_explore(&a, &a, DiffMetric::L2norm).unwrap(), 0.0);
        let wd = CoreVector::exact(vec![0.0, 1.0]);
        let base = CoreVector::exact(vec![0.6, 0.1]);
        assert!((score_explore(&wd, &base, DiffMetric::L2raw).unwrap() - 1.17f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn diverge_examples() {
        let stats = DevianceStats {
            expected: 0.375,
            variance: 0.046875,
            metric: DiffMetric::L2norm,
            provenance: Provenance::Exact,
        };
        assert_eq!(score_diverge(&stats, &cfg()), 0.421875);
        let c = ScoreConfig { lambda_var: 0.0, ..cfg() };
        assert_eq!(score_diverge(&stats, &c), 0.375);
    }

    #[test]
    fn order_signs_and_inversions() {
        assert_eq!(relative_order_sign(&[0.6, 0.1], 0, 1).unwrap(), Ordering::Greater);
        assert_eq!(relative_order_sign(&[0.5, 0.5], 0, 1).unwrap(), Ordering::Equal);
        assert_eq!(relative_order_sign(&[0.1, 0.6], 0, 1).unwrap(), Ordering::Less);
        assert!(relative_order_sign(&[0.1, 0.6], 1, 1).is_err());

        assert_eq!(score_inverted(&[0.1, 0.6], &[0.6, 0.1]).unwrap(), 1.0);
        assert_eq!(score_inverted(&[0.5, 0.5], &[0.6, 0.1]).unwrap(), 1.0);
        assert_eq!(score_inverted(&[0.3, 0.2, 0.4], &[0.3, 0.2, 0.1]).unwrap(), 2.0 / 3.0);
        assert_eq!(score_inverted(&[0.3, 0.2, 0.25], &[0.3, 0.2, 0.1]).unwrap(), 1.0 / 3.0);
        assert_eq!(score_inverted(&[0.6, 0.1], &[0.6, 0.1]).unwrap(), 0.0);
        assert!(score_inverted(&[0.6], &[0.6]).is_err());
    }

    #[test]
    fn diversity_of_identical_deterministic_models_is_zero() {
        let m3 = fixtures::m3();
        let s2 = fixtures::s2(&m3);
        assert_eq!(diversity_score(&m3, &m3, &TokenString::root(), &s2, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn fairness_on_uniform_baseline() {
        let m1 = fixtures::m1();
        let s2 = fixtures::s2(&m1);
        let (f, warning) = fairness_score(&m1, &m1, &TokenString::root(), &s2, &cfg()).unwrap();
        assert!((f - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(warning.is_none());

        let s = System::new(vec![Structure::token_indicator("x", 0), Structure::token_indicator("y", 0)]).unwrap();
        let m3 = fixtures::m3();
        let (f, warning) = fairness_score(&m3, &m1, &TokenString::root(), &s, &cfg()).unwrap();
        assert_eq!(f, 0.0);
        assert!(warning.is_some());
    }

    #[test]
    fn constraint_example() {
        // Singleton roles over a two-token model with cores 0.8 (target),
        // 0.1 (avoid) and a conserve drift of 0.05.
        let spec = |pa: f64| {
            TrajectoryModel::from_json_str(&format!(
                r#"{{"tokens":["a","b","c"],"max_len":3,"branches":{{"":{{"a":{pa},"b":{},"c":{}}},"a":{{"<eos>":1}},"b":{{"<eos>":1}},"c":{{"<eos>":1}}}}}}"#,
                0.1,
                0.9 - pa
            ))
            .unwrap()
        };
        let w = spec(0.8);
        let w0 = spec(0.75);
        let cs = ConstraintSystems::new(
            Some(System::singleton(Structure::token_indicator("t", 0))),
            Some(System::singleton(Structure::token_indicator("v", 1))),
            Some(System::singleton(Structure::token_indicator("k", 0))),
        )
        .unwrap();
        let c = ScoreConfig { aggregator: Aggregator::Mean, metric: DiffMetric::L2norm, ..cfg() };
        let rho_c = constraint_score(&w, &w0, &TokenString::root(), &cs, &c).unwrap();
        assert!((rho_c - 0.65).abs() < 1e-12);
        assert_eq!(constraint_score(&w, &w0, &TokenString::root(), &ConstraintSystems::default(), &c).unwrap(), 0.0);
        let same = constraint_score(&w, &w, &TokenString::root(), &cs, &c).unwrap();
        assert!((same - 0.7).abs() < 1e-12);
    }

    #[test]
    fn intervention_score_combines_components() {
        let m2 = fixtures::m2();
        let s2 = fixtures::s2(&m2);
        let m1 = fixtures::m1();
        let b = intervention_score(&m1, &m2, &TokenString::root(), &s2, &ConstraintSystems::default(), &cfg()).unwrap();
        assert!((b.rho_chi - (b.rho_d + b.rho_f + b.rho_c)).abs() < 1e-15);
        assert_eq!(b.warnings.len(), 1);
        let only_d = ScoreConfig { lambda_f: 0.0, lambda_c: 0.0, ..cfg() };
        let b = intervention_score(&m1, &m2, &TokenString::root(), &s2, &ConstraintSystems::default(), &only_d).unwrap();
        assert_eq!(b.rho_chi, b.rho_d);
        assert!(b.warnings.is_empty());
    }

    #[test]
    fn candidates_score_identically_in_both_modes() {
        let m2 = fixtures::m2();
        let s2 = fixtures::s2(&m2);
        let candidates = vec![
            Intervention::identity(),
            Intervention::new("hot", vec![Transform::Temperature(2.0)]),
            Intervention::new("cold", vec![Transform::Temperature(0.5)]),
        ];
        let run = |exec| {
            score_candidates(&m2, &TokenString::root(), &s2, &ConstraintSystems::default(), &candidates, &cfg(), exec)
                .unwrap()
        };
        let seq = run(Exec::Sequential);
        assert_eq!(seq, run(Exec::Parallel));
        assert_eq!(seq[0].score_explore, 0.0);
        assert!((seq.iter().map(|b| b.pi).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
