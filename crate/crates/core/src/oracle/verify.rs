use serde::{Deserialize, Serialize};

use super::random::{random_pareto_baseline, random_subset, random_system, random_trajectory, random_tree, rng};
use super::touchpoints::{
    consistency_breadth_check, gini_simpson_check, iiv_check, oracle_gap, structure_relative_homogenization,
    total_expectation_gap, LanguageSet, ValiditySet,
};
use crate::cores::{generalized_core, structure_core, system_core, EscortParams, LogBase};
use crate::error::Result;
use crate::model::{fixtures, TokenString, TrajectoryModel};
use crate::orientation::{deviance_stats, dynamics_trace, homogenization_report};
use crate::structures::{DiffMetric, System};
use crate::xeno::{pareto_demo, score_inverted, tilt_by_rewards};

type CheckGroup = fn(&mut Vec<IdentityCheck>) -> Result<()>;

pub const VERIFY_SEED: u64 = 20_240_601;
const RANDOM_TREES: usize = 200;
const TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl IdentityCheck {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_owned(), passed, detail: detail.into() }
    }
}

/// Largest violation along `y` from the root of: `φ_x(0) = ⟨Λ⟩(root)`,
/// `φ_y(k) = Λ(x_k) − φ_x(0)`, `φ_z(k) = Λ(y) − φ_x(k)`, `φ_x(T) = Λ(y)`,
/// `φ_z(T) = 0` and `φ_z(0) = φ_y(T)`.
pub fn dynamics_identity_gap(model: &TrajectoryModel, system: &System, y: &TokenString) -> Result<f64> {
    let root = TokenString::root();
    let states = dynamics_trace(model, system, y, &root)?;
    let core0 = system_core(model, &root, system)?.values;
    let lambda_y = system.evaluate(y)?.0;
    let mut worst = 0.0f64;
    let mut bump = |a: f64, b: f64| worst = worst.max((a - b).abs());
    for (k, s) in states.iter().enumerate() {
        let lambda_x = system.evaluate(&y.prefix(k))?.0;
        for i in 0..system.len() {
            bump(s.phi_y[i], lambda_x[i] - core0[i]);
            bump(s.phi_z[i], lambda_y[i] - s.phi_x[i]);
        }
    }
    let (first, last) = (&states[0], &states[states.len() - 1]);
    for i in 0..system.len() {
        bump(first.phi_x[i], core0[i]);
        bump(last.phi_x[i], lambda_y[i]);
        bump(last.phi_z[i], 0.0);
        bump(first.phi_z[i], last.phi_y[i]);
    }
    Ok(worst)
}

fn fixture_checks(out: &mut Vec<IdentityCheck>) -> Result<()> {
    let root = TokenString::root();
    let m2 = fixtures::m2();
    let core = system_core(&m2, &root, &fixtures::s2(&m2))?.values;
    out.push(IdentityCheck::new("fixture_core_m2", core == [0.25, 0.75], format!("{core:?}")));

    let s1 = fixtures::s1(&m2);
    let d = deviance_stats(&m2, &root, &s1, DiffMetric::L2norm)?;
    out.push(IdentityCheck::new(
        "fixture_deviance_m2",
        (d.expected - 0.375).abs() <= TOL && (d.variance - 0.046875).abs() <= TOL,
        format!("expected {} variance {}", d.expected, d.variance),
    ));
    let m3 = fixtures::m3();
    let d = deviance_stats(&m3, &root, &fixtures::s1(&m3), DiffMetric::L2norm)?;
    out.push(IdentityCheck::new(
        "fixture_deviance_m3",
        d.expected == 0.0 && d.variance == 0.0,
        format!("expected {} variance {}", d.expected, d.variance),
    ));

    let h = homogenization_report(&m2, &m3, &root, &s1, DiffMetric::L2norm, LogBase::Natural)?;
    out.push(IdentityCheck::new("homogenization_m2_to_m3", h.homogenizing, format!("{:?}", h.delta_expected)));
    Ok(())
}

fn gini_simpson_grid(out: &mut Vec<IdentityCheck>) -> Result<()> {
    let mut worst = 0.0f64;
    for k in 0..=20 {
        let g = gini_simpson_check(f64::from(k) / 20.0)?;
        worst = worst.max((g.e_abs - g.gs).abs()).max((g.var_alpha - g.gs / 2.0).abs());
    }
    out.push(IdentityCheck::new("gini_simpson_grid", worst <= TOL, format!("max gap {worst:e} over 21 points")));
    Ok(())
}

fn random_tree_checks(out: &mut Vec<IdentityCheck>) -> Result<()> {
    let mut r = rng(VERIFY_SEED);
    let (mut te, mut og, mut dyn_gap, mut escort) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut og_exact, mut iiv_exact, mut consistency) = (true, true, true);
    for _ in 0..RANDOM_TREES {
        let model = random_tree(&mut r);
        let system = random_system(&mut r, model.alphabet_arc());
        te = te.max(total_expectation_gap(&model, &system)?);
        let (gap, exact) = oracle_gap(&model, &system)?;
        og = og.max(gap);
        og_exact &= exact;

        let subset = random_subset(&mut r, &model);
        iiv_exact &= iiv_check(&model, &ValiditySet::new(&model, subset)?)?.exact;
        let support: Vec<TokenString> =
            model.enumerate_trajectories(&TokenString::root())?.into_iter().map(|t| t.string).collect();
        consistency &= consistency_breadth_check(&model, &LanguageSet::new(support)?)? == (true, true);

        let y = random_trajectory(&mut r, &model);
        dyn_gap = dyn_gap.max(dynamics_identity_gap(&model, &system, &y)?);

        for s in system.structures() {
            let a = generalized_core(&model, &TokenString::root(), s, EscortParams::STANDARD)?;
            let b = structure_core(&model, &TokenString::root(), s)?;
            escort = escort.max((a - b).abs());
        }
    }
    let n = RANDOM_TREES;
    out.push(IdentityCheck::new("total_expectation", te <= TOL, format!("max gap {te:e} over {n} trees")));
    out.push(IdentityCheck::new(
        "oracle_equivalence",
        og <= TOL && og_exact,
        format!("max float gap {og:e}, rational agreement {og_exact}"),
    ));
    out.push(IdentityCheck::new("is_it_valid", iiv_exact, "core = 1 − err exactly"));
    out.push(IdentityCheck::new("consistency_breadth", consistency, "support language is consistent and broad"));
    out.push(IdentityCheck::new("dynamics", dyn_gap <= TOL, format!("max gap {dyn_gap:e}")));
    out.push(IdentityCheck::new("escort_standard", escort <= 1e-9, format!("max gap {escort:e}")));
    Ok(())
}

fn scoring_checks(out: &mut Vec<IdentityCheck>) -> Result<()> {
    let probs = [0.25, 0.75];
    let tilted = tilt_by_rewards(&probs, &[1.0, -2.0], 3.0)?;
    let total: f64 = tilted.iter().sum();
    let recovered = tilt_by_rewards(&probs, &[1.0, -2.0], 0.0)?;
    out.push(IdentityCheck::new(
        "tilt_normalization",
        (total - 1.0).abs() <= TOL && recovered == probs,
        format!("sum {total}"),
    ));

    let tie = score_inverted(&[0.5, 0.5], &[0.6, 0.4])?;
    let same = score_inverted(&[0.9, 0.1], &[0.6, 0.4])?;
    out.push(IdentityCheck::new("inverted_tie_rule", tie == 1.0 && same == 0.0, format!("tie {tie}, same {same}")));

    let mut r = rng(VERIFY_SEED ^ 0x5a5a);
    let mut worst = 0.0f64;
    let mut all = true;
    for n in 2..=6 {
        for _ in 0..3 {
            let base = random_pareto_baseline(&mut r, n);
            let rep = pareto_demo(n, &base)?;
            let d_wd = base.iter().enumerate().map(|(i, b)| (if i == n - 1 { 1.0 } else { 0.0 } - b).powi(2));
            let d_wf = base.iter().map(|b| (1.0 / n as f64 - b).powi(2));
            for (got, want) in [
                (rep.w_d.rho_d, d_wd.sum::<f64>().sqrt()),
                (rep.w_f.rho_d, d_wf.sum::<f64>().sqrt()),
                (rep.w_d.rho_f, 1.0),
                (rep.w_f.rho_f, 1.0 + (n as f64).ln()),
            ] {
                worst = worst.max((got - want).abs());
            }
            all &= rep.non_dominated;
        }
    }
    out.push(IdentityCheck::new(
        "pareto",
        all && worst <= TOL,
        format!("n = 2..6, non-dominated {all}, max closed-form gap {worst:e}"),
    ));

    let rh = structure_relative_homogenization()?;
    out.push(IdentityCheck::new(
        "relative_homogenization",
        rh.core_k_before == 0.5 && rh.core_k_after == 1.0 && rh.stats_before == rh.stats_after,
        format!("core_k {} to {}", rh.core_k_before, rh.core_k_after),
    ));
    Ok(())
}

/// Deterministic battery of identity checks on fixtures and seeded random
/// trees. An evaluation error is reported as a failed check, not propagated.
pub fn verify_suite() -> Vec<IdentityCheck> {
    let mut out = Vec::new();
    let groups: [(&str, CheckGroup); 4] = [
        ("fixtures", fixture_checks),
        ("gini_simpson", gini_simpson_grid),
        ("random_trees", random_tree_checks),
        ("scoring", scoring_checks),
    ];
    for (name, run) in groups {
        if let Err(e) = run(&mut out) {
            out.push(IdentityCheck::new(name, false, format!("error: {e}")));
        }
    }
    out
}
