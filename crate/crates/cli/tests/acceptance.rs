//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use xenodiv::cores::{generalized_core, structure_core, EscortParams, LogBase};
use xenodiv::model::{fixtures, Next, TokenString, TrajectoryModel};
use xenodiv::oracle::random::{
    random_pareto_baseline, random_subset, random_system, random_trajectory, random_tree, rng,
};
use xenodiv::oracle::{gini_simpson_check, iiv_check, oracle_gap, total_expectation_gap, ValiditySet};
use xenodiv::orientation::{deviance_stats, dynamics_trace, homogenization_report};
use xenodiv::structures::{DiffMetric, Structure, System};
use xenodiv::xeno::{pareto_demo, sample_tilted, score_inverted, tilt_by_rewards, TiltedDistribution};
use xenodiv::Exec;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lib<T>(r: xenodiv::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Baseline components in thousandths; the generator works on that grid.
fn thousandths(b: &[f64]) -> Vec<i128> {
    b.iter().map(|x| (x * 1000.0).round() as i128).collect()
}

fn pareto() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut runs = 0;
    for n in 2..=6usize {
        for _ in 0..100 {
            let b = random_pareto_baseline(&mut r, n);
            let rep = lib(pareto_demo(n, &b))?;
            // Squared distances scaled by (1000 n)² are integers, so the
            // diversity comparison is exact.
            let k = thousandths(&b);
            let ni = n as i128;
            let d_wd: i128 = (0..n).map(|i| (ni * (if i == n - 1 { 1000 } else { 0 } - k[i])).pow(2)).sum();
            let d_wf: i128 = (0..n).map(|i| (1000 - ni * k[i]).pow(2)).sum();
            ensure(d_wd > d_wf, format!("exact rho_d ordering fails for {b:?}"))?;
            ensure(rep.w_d.score_diverge == 0.0 && rep.w_f.score_diverge == 0.0, "deterministic diverge term")?;
            let scale = 1000.0 * n as f64;
            ensure((rep.w_d.rho_d - (d_wd as f64).sqrt() / scale).abs() <= 1e-12, "rho_d(w_d) closed form")?;
            ensure((rep.w_f.rho_d - (d_wf as f64).sqrt() / scale).abs() <= 1e-12, "rho_d(w_f) closed form")?;
            ensure(rep.w_d.rho_f == 1.0, format!("rho_f(w_d) = {}", rep.w_d.rho_f))?;
            ensure((rep.w_f.rho_f - (1.0 + (n as f64).ln())).abs() <= 1e-12, "rho_f(w_f) = 1 + ln n")?;
            ensure(rep.diversity_prefers_w_d && rep.fairness_prefers_w_f && rep.non_dominated, "non-dominance")?;
            runs += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, format!("took {secs:.3} s"))?;
    Ok(format!("{runs} baselines, n = 2..6, {secs:.3} s"))
}

fn gini_simpson() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..=20 {
        let mu = f64::from(k) * 0.05;
        let g = lib(gini_simpson_check(mu))?;
        worst = worst.max((g.e_abs - 2.0 * mu * (1.0 - mu)).abs());
        worst = worst.max((g.var_alpha - mu * (1.0 - mu)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-12, format!("max gap {worst:e}"))?;
    ensure(secs < 1.0, format!("took {secs:.3} s"))?;
    Ok(format!("21 grid points, max gap {worst:e}, {secs:.3} s"))
}

fn iiv() -> Outcome {
    let mut r = rng(303);
    for i in 0..100 {
        let m = random_tree(&mut r);
        let subset = random_subset(&mut r, &m);
        let res = lib(iiv_check(&m, &lib(ValiditySet::new(&m, subset))?))?;
        ensure(res.exact, format!("pair {i}: core {} err {}", res.core, res.err))?;
    }
    Ok("100 random pairs, core = 1 − err in exact arithmetic".into())
}

fn fixture_structures(m: &TrajectoryModel) -> Result<Vec<Structure>, String> {
    let mut out = fixtures::s2(m).structures().to_vec();
    let a = lib(m.parse("a <eos>"))?;
    let b = lib(m.parse("b <eos>"))?;
    out.push(lib(Structure::tabulated("graded", [(a, 0.3), (b, 0.8)], Some(0.5)))?);
    Ok(out)
}

fn escort() -> Outcome {
    let root = TokenString::root();
    // Analytic limit against a finite parameter point approaching it.
    let cases = [
        ("(1,0)", EscortParams::new(1.0, 0.0), EscortParams::new(1.0, 1e-9)),
        ("(1,inf)", EscortParams::new(1.0, f64::INFINITY), EscortParams::new(1.0, 1e10)),
        ("(inf,1)", EscortParams::new(f64::INFINITY, 1.0), EscortParams::new(1e8, 1.0)),
        ("(-inf,inf)", EscortParams::new(f64::NEG_INFINITY, f64::INFINITY), EscortParams::new(-1e8, 1e10)),
    ];
    let (mut compared, mut undefined, mut worst) = (0, 0, 0.0f64);
    for (name, m) in fixtures::all_models() {
        for s in fixture_structures(&m)? {
            let g = lib(generalized_core(&m, &root, &s, EscortParams::STANDARD))?;
            let c = lib(structure_core(&m, &root, &s))?;
            ensure((g - c).abs() <= 1e-12, format!("{name}/{}: (1,1) gives {g}, core {c}", s.name()))?;
            for (label, exact, approx) in cases {
                match (generalized_core(&m, &root, &s, exact), generalized_core(&m, &root, &s, approx)) {
                    (Ok(a), Ok(b)) => {
                        worst = worst.max((a - b).abs());
                        ensure((a - b).abs() <= 1e-6, format!("{name}/{}/{label}: {a} vs {b}", s.name()))?;
                        compared += 1;
                    }
                    // Zero compliance with q < 0 is outside the domain at the
                    // limit and at every approach point alike.
                    (Err(_), Err(_)) => undefined += 1,
                    (a, b) => return Err(format!("{name}/{}/{label}: {a:?} vs {b:?}", s.name())),
                }
            }
        }
    }
    Ok(format!("{compared} limit comparisons, max gap {worst:e}; {undefined} outside the domain"))
}

fn tilt() -> Outcome {
    let m2 = fixtures::m2();
    let ts = lib(m2.enumerate_trajectories(&TokenString::root()))?;
    let baseline: Vec<f64> = ts.iter().map(|t| t.prob).collect();
    let rewards: Vec<f64> = ts.iter().map(|t| if t.string.contains_token(0) { 1.0 } else { 0.0 }).collect();
    let probs = lib(tilt_by_rewards(&baseline, &rewards, 3f64.ln()))?;
    ensure(probs.iter().all(|p| (p - 0.5).abs() <= 1e-12), format!("β = ln 3 gives {probs:?}"))?;
    ensure(lib(tilt_by_rewards(&baseline, &rewards, 0.0))? == baseline, "β = 0 must return the baseline")?;

    let mut r = rng(505);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = r.gen_range(1..=6);
        let raw: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(1u32..=100))).collect();
        let total: f64 = raw.iter().sum();
        let b: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let rw: Vec<f64> = (0..n).map(|_| r.gen_range(-5.0..5.0)).collect();
        let beta = r.gen_range(0.0..20.0);
        let p = lib(tilt_by_rewards(&b, &rw, beta))?;
        worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    ensure(worst <= 1e-9, format!("normalization gap {worst:e}"))?;

    let dist = TiltedDistribution { strings: ts.iter().map(|t| t.string.clone()).collect(), baseline, rewards, probs };
    let draws = 100_000;
    let idx = lib(sample_tilted(&dist, draws, 2024, Exec::Parallel))?;
    let hits = idx.iter().filter(|&&i| dist.strings[i].contains_token(0)).count() as f64;
    let freq = hits / draws as f64;
    let sigma = (0.25 / draws as f64).sqrt();
    ensure((freq - 0.5).abs() <= 3.0 * sigma, format!("frequency {freq} vs 0.5 ± {:.5}", 3.0 * sigma))?;
    Ok(format!("(0.5, 0.5) example, normalization gap {worst:e}, 1e5-draw frequency {freq}"))
}

fn total_expectation() -> Outcome {
    let mut r = rng(606);
    let (mut te, mut og) = (0.0f64, 0.0f64);
    for i in 0..500 {
        let m = random_tree(&mut r);
        let sys = random_system(&mut r, m.alphabet_arc());
        te = te.max(lib(total_expectation_gap(&m, &sys))?);
        let (gap, exact) = lib(oracle_gap(&m, &sys))?;
        og = og.max(gap);
        ensure(exact, format!("tree {i}: rational oracle disagrees"))?;
    }
    ensure(te <= 1e-12 && og <= 1e-12, format!("decomposition gap {te:e}, oracle gap {og:e}"))?;
    Ok(format!("500 trees, decomposition gap {te:e}, oracle gap {og:e}"))
}

fn dynamics_exact(m: &TrajectoryModel, sys: &System, y: &TokenString) -> Result<(), String> {
    let states = lib(dynamics_trace(m, sys, y, &TokenString::root()))?;
    let lambda_y = lib(sys.evaluate(y))?.0;
    let (first, last) = (&states[0], &states[states.len() - 1]);
    ensure(last.phi_x == lambda_y, format!("phi_x(T) {:?} vs {lambda_y:?}", last.phi_x))?;
    ensure(last.phi_z.iter().all(|v| *v == 0.0), format!("phi_z(T) {:?}", last.phi_z))?;
    ensure(first.phi_z == last.phi_y, format!("phi_z(0) {:?} vs phi_y(T) {:?}", first.phi_z, last.phi_y))
}

fn dynamics() -> Outcome {
    let mut count = 0;
    for (_, m) in fixtures::all_models() {
        for sys in [fixtures::s1(&m), fixtures::s2(&m)] {
            for t in lib(m.enumerate_trajectories(&TokenString::root()))? {
                dynamics_exact(&m, &sys, &t.string)?;
                count += 1;
            }
        }
    }
    let mut r = rng(707);
    for _ in 0..100 {
        let m = random_tree(&mut r);
        let sys = random_system(&mut r, m.alphabet_arc());
        let y = random_trajectory(&mut r, &m);
        dynamics_exact(&m, &sys, &y)?;
    }
    Ok(format!("{count} fixture trajectories and 100 random pairs, exact"))
}

/// Point mass on `y`, built over `m`'s alphabet.
fn deterministic(m: &TrajectoryModel, y: &TokenString) -> xenodiv::Result<TrajectoryModel> {
    let a = m.alphabet_arc();
    let branches = (0..y.len())
        .map(|k| {
            let mut row = vec![0.0; a.outcomes()];
            row[a.outcome_index(y.symbol_at(k + 1).unwrap_or(Next::End))] = 1.0;
            (y.prefix(k), row)
        })
        .collect();
    TrajectoryModel::new(a.clone(), m.max_len(), branches)
}

fn homogenization() -> Outcome {
    let (m2, m3) = (fixtures::m2(), fixtures::m3());
    let root = TokenString::root();
    let h = lib(homogenization_report(&m2, &m3, &root, &fixtures::s1(&m2), DiffMetric::L2norm, LogBase::Natural))?;
    ensure(h.delta_expected == -0.375, format!("ΔE = {}", h.delta_expected))?;
    ensure(h.delta_variance == -0.046875, format!("ΔVar = {}", h.delta_variance))?;
    ensure(h.homogenizing, "collapse must be flagged")?;
    let mut r = rng(808);
    let mut checked = 0;
    for _ in 0..100 {
        let m = random_tree(&mut r);
        let sys = random_system(&mut r, m.alphabet_arc());
        let d = lib(deterministic(&m, &random_trajectory(&mut r, &m)))?;
        for metric in xenodiv::structures::ALL_METRICS {
            let s = lib(deviance_stats(&d, &root, &sys, metric))?;
            ensure(s.expected == 0.0 && s.variance == 0.0, format!("deterministic model gives {s:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("ΔE = -0.375, ΔVar = -0.046875; {checked} deterministic cases give (0, 0)"))
}

fn tie_rule() -> Outcome {
    let s = lib(score_inverted(&[0.5, 0.5], &[0.6, 0.1]))?;
    ensure(s == 1.0, format!("score_inverted = {s}"))?;
    Ok("score_inverted((0.5, 0.5) vs (0.6, 0.1)) = 1".into())
}

fn determinism() -> Outcome {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let fx = manifest.join("../core/fixtures");
    let inputs = manifest.join("tests/golden/inputs");
    let p = |dir: &PathBuf, f: &str| dir.join(f).to_string_lossy().into_owned();
    let (m2, m3, s1, s2) = (p(&fx, "m2.json"), p(&fx, "m3.json"), p(&fx, "s1.json"), p(&fx, "s2.json"));
    let (cands, cons, rewards) = (p(&inputs, "candidates.json"), p(&inputs, "constraints.json"), p(&inputs, "rewards_m2.json"));
    let commands: Vec<Vec<&str>> = vec![
        vec!["analyze", "--model", &m2, "--system", &s2, "--after", &m3],
        vec!["analyze", "--model", &m2, "--system", &s2, "--format", "csv"],
        vec!["dynamics", "--model", &m2, "--system", &s1, "--trajectory", "b <eos>"],
        vec!["dynamics", "--model", &m2, "--system", &s2, "--trajectory", "a <eos>", "--format", "json"],
        vec!["score", "--model", &m2, "--system", &s2, "--candidates", &cands, "--constraints", &cons, "--draw", "--seed", "3"],
        vec!["sample", "--model", &m2, "--system", &s2, "--seed", "17", "--count", "2000"],
        vec!["sample", "--model", &m2, "--rewards", &rewards, "--seed", "17", "--count", "500", "--format", "csv"],
        vec!["sample", "--model", &m2, "--system", &s2, "--seed", "17", "--count", "50", "--importance-sampling", "300"],
        vec!["pareto", "4", "0.9,0.5,0.3,0.05"],
        vec!["verify"],
    ];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (i, args) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out_path = tmp.path().join(format!("{i}_{run}.out"));
            let status = Command::new(env!("CARGO_BIN_EXE_xenodiv"))
                .args(args)
                .arg("--out")
                .arg(&out_path)
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.success(), format!("{} exited with {status}", args.join(" ")))?;
            outputs.push(std::fs::read(&out_path).map_err(|e| e.to_string())?);
        }
        ensure(!outputs[0].is_empty() && outputs[0] == outputs[1], format!("{} is not reproducible", args[0]))?;
    }
    Ok(format!("{} invocations across all six commands, byte-identical", commands.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("pareto trade-off", pareto),
        ("gini-simpson identities", gini_simpson),
        ("validity mapping", iiv),
        ("escort limits", escort),
        ("tilt correctness", tilt),
        ("total expectation and oracle", total_expectation),
        ("dynamics identities", dynamics),
        ("homogenization comparator", homogenization),
        ("inverted tie rule", tie_rule),
        ("end-to-end determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
