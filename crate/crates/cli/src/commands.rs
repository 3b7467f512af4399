use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use xenodiv::cores::{core_entropy, normalized_core, rank_structures, system_core_with, CoreVector, Evaluated};
use xenodiv::model::{Intervention, InterventionSpec, TokenString, TrajectoryModel, TrajectoryReward, TransformSpec};
use xenodiv::oracle::{oracle_gap, total_expectation_gap, verify_suite, IdentityCheck};
use xenodiv::orientation::{
    deviance, deviance_stats_with, dynamics_trace_with, homogenization_report, orientation, write_dynamics_csv,
    DevianceStats, DynamicsState, HomogenizationReport,
};
use xenodiv::structures::{system_score, DiffMetric, System};
use xenodiv::xeno::{
    pareto_demo, sample_intervention, sample_tilted, score_candidates, snis_tilted, tilted_distribution_with,
    ParetoReport, RewardSpec, ScoreBreakdown, ScoreConfig,
};
use xenodiv::Exec;

use crate::io::{
    csv_bytes, emit, load_config, load_constraints, load_model, load_system, parse_string, read_json, require,
    to_json, CliError, CliResult,
};
use crate::{AnalyzeArgs, Common, DynamicsArgs, Format, ParetoArgs, SampleArgs, ScoreArgs, VerifyArgs};

const TOOL: &str = "xenodiv";
const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every JSON report: tool identity, the resolved invocation and the result.
#[derive(Serialize)]
struct Report<'a, A: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    arguments: &'a A,
    score_config: Option<&'a ScoreConfig>,
    result: R,
}

fn write_report<A: Serialize, R: Serialize>(
    common: &Common,
    command: &'static str,
    args: &A,
    cfg: Option<&ScoreConfig>,
    result: R,
) -> CliResult<()> {
    let report = Report { tool: TOOL, version: VERSION, command, arguments: args, score_config: cfg, result };
    emit(common.out.as_deref(), &to_json(&report)?)
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        log::warn!("{w}");
    }
}

fn fmt_f64(x: f64) -> String {
    x.to_string()
}

fn prompt_of(model: &TrajectoryModel, common: &Common) -> CliResult<TokenString> {
    parse_string(model, &common.prompt)
}

fn model_and_system(common: &Common) -> CliResult<(TrajectoryModel, System)> {
    let model = load_model(require(&common.model, "--model")?)?;
    let system = load_system(require(&common.system, "--system")?, &model)?;
    Ok((model, system))
}

#[derive(Serialize)]
struct StructureStats {
    name: String,
    core: f64,
    deviance: DevianceStats,
}

#[derive(Serialize)]
struct TrajectoryRow {
    string: String,
    prob: f64,
    compliance: Vec<f64>,
    orientation: Vec<f64>,
    system_score: f64,
    deviance: f64,
}

#[derive(Serialize)]
struct AnalyzeResult {
    structures: Vec<String>,
    metric: DiffMetric,
    core: CoreVector,
    normalized_core: Option<Vec<f64>>,
    core_entropy: Option<f64>,
    /// Structure names, least complied-with first; ties share a group.
    ranking: Vec<Vec<String>>,
    deviance: DevianceStats,
    per_structure: Vec<StructureStats>,
    trajectories: Vec<TrajectoryRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    homogenization: Option<HomogenizationReport>,
    warnings: Vec<String>,
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let common = &args.common;
    let cfg = load_config(common.config.as_deref())?;
    let (model, system) = model_and_system(common)?;
    let prompt = prompt_of(&model, common)?;
    let exec = common.exec();
    let names = system.names();

    let evaluated = Evaluated::new(&model, &prompt, &system, exec)?;
    let core = evaluated.core(&model, &prompt);
    let mut warnings = Vec::new();
    let (normalized, entropy) = match (normalized_core(&core.values), core_entropy(&core.values, cfg.log_base)) {
        (Ok(n), Ok(h)) => (Some(n), Some(h)),
        (Err(xenodiv::Error::DegenerateCore), _) | (_, Err(xenodiv::Error::DegenerateCore)) => {
            warnings.push("core is all zero; normalized core and entropy are undefined".to_owned());
            (None, None)
        }
        (Err(e), _) | (_, Err(e)) => return Err(e.into()),
    };
    let ranking = rank_structures(&core.values)
        .into_iter()
        .map(|g| g.into_iter().map(|i| names[i].clone()).collect())
        .collect();
    let stats = deviance_stats_with(&model, &prompt, &system, cfg.metric, exec)?;
    let per_structure = (0..system.len())
        .map(|i| {
            Ok(StructureStats {
                name: names[i].clone(),
                core: core.values[i],
                deviance: deviance_stats_with(&model, &prompt, &system.component(i), cfg.metric, exec)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let rows = evaluated
        .trajectories
        .iter()
        .zip(&evaluated.compliances)
        .map(|(t, v)| {
            let o = orientation(v, &core)?;
            Ok(TrajectoryRow {
                string: model.render(&t.string),
                prob: t.prob,
                compliance: v.0.clone(),
                system_score: system_score(v, cfg.aggregator)?,
                deviance: deviance(&o, cfg.metric)?,
                orientation: o.values,
            })
        })
        .collect::<Result<Vec<_>, xenodiv::Error>>()?;
    let homogenization = match &args.after {
        Some(path) => {
            let after = load_model(path)?;
            let h = homogenization_report(&model, &after, &prompt, &system, cfg.metric, cfg.log_base)?;
            warnings.extend(h.warnings.iter().cloned());
            Some(h)
        }
        None => None,
    };
    warn_all(&warnings);

    if common.format == Some(Format::Csv) {
        let mut header = vec!["string".to_owned(), "prob".to_owned()];
        header.extend(names.iter().map(|n| format!("{n}.compliance")));
        header.extend(names.iter().map(|n| format!("{n}.orientation")));
        header.extend(["system_score".to_owned(), "deviance".to_owned()]);
        let bytes = csv_bytes(&header, |w| {
            for r in &rows {
                let mut rec = vec![r.string.clone(), fmt_f64(r.prob)];
                rec.extend(r.compliance.iter().chain(&r.orientation).map(|x| fmt_f64(*x)));
                rec.extend([fmt_f64(r.system_score), fmt_f64(r.deviance)]);
                w.write_record(&rec)?;
            }
            Ok(())
        })?;
        return emit(common.out.as_deref(), &bytes);
    }
    let result = AnalyzeResult {
        structures: names,
        metric: cfg.metric,
        core,
        normalized_core: normalized,
        core_entropy: entropy,
        ranking,
        deviance: stats,
        per_structure,
        trajectories: rows,
        homogenization,
        warnings,
    };
    write_report(common, "analyze", args, Some(&cfg), result)
}

#[derive(Serialize)]
struct DynamicsResult {
    structures: Vec<String>,
    trajectory: String,
    states: Vec<DynamicsState>,
}

pub fn dynamics(args: &DynamicsArgs) -> CliResult<()> {
    let common = &args.common;
    let (model, system) = model_and_system(common)?;
    let x0 = prompt_of(&model, common)?;
    let y = parse_string(&model, &args.trajectory)?;
    if model.trajectory_probability(&x0, &y).unwrap_or(0.0) <= 0.0 {
        return Err(CliError::Validation(format!("'{}' is not a trajectory of the model", model.render(&y))));
    }
    let states = dynamics_trace_with(&model, &system, &y, &x0, common.exec())?;
    let names = system.names();
    if common.format == Some(Format::Json) {
        let result = DynamicsResult { structures: names, trajectory: model.render(&y), states };
        return write_report(common, "dynamics", args, None, result);
    }
    let mut buf = Vec::new();
    write_dynamics_csv(&mut buf, &names, &states)?;
    emit(common.out.as_deref(), &buf)
}

#[derive(Serialize)]
struct Draw {
    seed: u64,
    index: usize,
    name: String,
}

#[derive(Serialize)]
struct ScoreResult {
    structures: Vec<String>,
    beta_rho: f64,
    candidates: Vec<ScoreBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    draw: Option<Draw>,
}

pub fn score(args: &ScoreArgs) -> CliResult<()> {
    let common = &args.common;
    let cfg = load_config(common.config.as_deref())?;
    let (model, system) = model_and_system(common)?;
    let prompt = prompt_of(&model, common)?;
    let constraints = load_constraints(args.constraints.as_deref(), &model)?;
    let specs: Vec<InterventionSpec> = read_json(&args.candidates)?;
    if args.draw && common.seed.is_none() {
        return Err(CliError::Config("--draw requires --seed".into()));
    }
    let needs_reward =
        specs.iter().any(|s| s.transforms.iter().any(|t| matches!(t, TransformSpec::RewardTilt { .. })));
    let reward: Option<Arc<dyn TrajectoryReward>> = if needs_reward {
        Some(Arc::new(RewardSpec::new(&model, &prompt, system.clone(), constraints.clone(), &cfg)?))
    } else {
        None
    };
    let candidates = specs
        .iter()
        .map(|s| Intervention::resolve(s, &model, reward.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let scored = score_candidates(&model, &prompt, &system, &constraints, &candidates, &cfg, common.exec())?;
    for b in &scored {
        for w in &b.warnings {
            log::warn!("{}: {w}", b.name);
        }
    }
    let draw = match (args.draw, common.seed) {
        (true, Some(seed)) => {
            let rho: Vec<f64> = scored.iter().map(|b| b.rho_chi).collect();
            let index = sample_intervention(&rho, cfg.beta_rho, seed)?;
            Some(Draw { seed, index, name: scored[index].name.clone() })
        }
        _ => None,
    };

    if common.format == Some(Format::Csv) {
        let header: Vec<String> = [
            "name",
            "score_explore",
            "score_diverge",
            "rho_d",
            "score_even",
            "score_inverted",
            "rho_f",
            "rho_c",
            "rho_chi",
            "pi",
        ]
        .map(String::from)
        .to_vec();
        let bytes = csv_bytes(&header, |w| {
            for b in &scored {
                let even = b.score_even.map(fmt_f64).unwrap_or_default();
                let mut rec = vec![b.name.clone()];
                rec.extend([b.score_explore, b.score_diverge, b.rho_d].map(fmt_f64));
                rec.push(even);
                rec.extend([b.score_inverted, b.rho_f, b.rho_c, b.rho_chi, b.pi].map(fmt_f64));
                w.write_record(&rec)?;
            }
            Ok(())
        })?;
        return emit(common.out.as_deref(), &bytes);
    }
    let result = ScoreResult { structures: system.names(), beta_rho: cfg.beta_rho, candidates: scored, draw };
    write_report(common, "score", args, Some(&cfg), result)
}

/// Reward read from an explicit table; strings missing from it are errors.
struct TableReward {
    prompt: TokenString,
    table: BTreeMap<TokenString, f64>,
    model: TrajectoryModel,
}

impl TrajectoryReward for TableReward {
    fn prompt(&self) -> &TokenString {
        &self.prompt
    }

    fn reward(&self, y: &TokenString) -> xenodiv::Result<f64> {
        self.table
            .get(y)
            .copied()
            .ok_or_else(|| xenodiv::Error::InvalidArgument(format!("no reward for '{}'", self.model.render(y))))
    }
}

#[derive(Serialize)]
struct TiltRow {
    string: String,
    baseline: f64,
    reward: f64,
    tilted: f64,
}

#[derive(Serialize)]
struct SampledRow {
    string: String,
    reward: f64,
}

#[derive(Serialize)]
struct ImportanceSummary {
    proposals: usize,
    effective_sample_size: f64,
}

#[derive(Serialize)]
struct SampleResult {
    method: &'static str,
    beta: f64,
    count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    distribution: Option<Vec<TiltRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    importance: Option<ImportanceSummary>,
    frequencies: BTreeMap<String, usize>,
    samples: Vec<SampledRow>,
}

/// Stream offset separating resampling draws from proposal draws.
const RESAMPLE_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn sample(args: &SampleArgs) -> CliResult<()> {
    let common = &args.common;
    let seed = common.seed.ok_or_else(|| CliError::Config("sample requires --seed".into()))?;
    let cfg = load_config(common.config.as_deref())?;
    let model = load_model(require(&common.model, "--model")?)?;
    let prompt = prompt_of(&model, common)?;
    let beta = args.beta.unwrap_or(cfg.beta_r);
    let reward: Box<dyn TrajectoryReward> = match &args.rewards {
        Some(path) => {
            let raw: BTreeMap<String, f64> = read_json(path)?;
            let table = raw
                .iter()
                .map(|(k, v)| Ok((parse_string(&model, k)?, *v)))
                .collect::<CliResult<BTreeMap<_, _>>>()?;
            Box::new(TableReward { prompt: prompt.clone(), table, model: model.clone() })
        }
        None => {
            let system = load_system(require(&common.system, "--system")?, &model)?;
            let constraints = load_constraints(args.constraints.as_deref(), &model)?;
            Box::new(RewardSpec::new(&model, &prompt, system, constraints, &cfg)?)
        }
    };
    let exec = common.exec();

    let (method, distribution, importance, samples) = match args.importance_sampling {
        None => {
            let dist = tilted_distribution_with(&model, reward.as_ref(), beta, exec)?;
            let idx = sample_tilted(&dist, args.count, seed, exec)?;
            let samples: Vec<SampledRow> = idx
                .iter()
                .map(|&i| SampledRow { string: model.render(&dist.strings[i]), reward: dist.rewards[i] })
                .collect();
            let rows = (0..dist.strings.len())
                .map(|i| TiltRow {
                    string: model.render(&dist.strings[i]),
                    baseline: dist.baseline[i],
                    reward: dist.rewards[i],
                    tilted: dist.probs[i],
                })
                .collect();
            ("exact", Some(rows), None, samples)
        }
        Some(proposals) => {
            let is = snis_tilted(&model, reward.as_ref(), beta, proposals, seed, exec)?;
            let idx = is.resample(args.count, seed ^ RESAMPLE_SEED_OFFSET)?;
            let samples: Vec<SampledRow> = idx
                .iter()
                .map(|&i| SampledRow { string: model.render(&is.proposals[i]), reward: is.rewards[i] })
                .collect();
            let summary = ImportanceSummary { proposals, effective_sample_size: is.effective_sample_size };
            ("importance_sampling", None, Some(summary), samples)
        }
    };
    let mut frequencies: BTreeMap<String, usize> = BTreeMap::new();
    for s in &samples {
        *frequencies.entry(s.string.clone()).or_insert(0) += 1;
    }

    if common.format == Some(Format::Csv) {
        let header = vec!["draw".to_owned(), "string".to_owned(), "reward".to_owned()];
        let bytes = csv_bytes(&header, |w| {
            for (i, s) in samples.iter().enumerate() {
                w.write_record([i.to_string(), s.string.clone(), fmt_f64(s.reward)])?;
            }
            Ok(())
        })?;
        return emit(common.out.as_deref(), &bytes);
    }
    let result = SampleResult { method, beta, count: args.count, distribution, importance, frequencies, samples };
    write_report(common, "sample", args, Some(&cfg), result)
}

fn parse_baseline(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|e| CliError::Config(format!("bad baseline component '{s}': {e}")))
        })
        .collect()
}

pub fn pareto(args: &ParetoArgs) -> CliResult<()> {
    let common = &args.common;
    let baseline = parse_baseline(&args.baseline)?;
    let report: ParetoReport = pareto_demo(args.n, &baseline)?;
    if common.format == Some(Format::Csv) {
        let header: Vec<String> =
            ["intervention", "score_explore", "score_diverge", "rho_d", "score_even", "score_inverted", "rho_f"]
                .map(String::from)
                .to_vec();
        let bytes = csv_bytes(&header, |w| {
            for (name, s) in [("w_d", &report.w_d), ("w_f", &report.w_f)] {
                let mut rec = vec![name.to_owned()];
                rec.extend(
                    [s.score_explore, s.score_diverge, s.rho_d, s.score_even, s.score_inverted, s.rho_f].map(fmt_f64),
                );
                w.write_record(&rec)?;
            }
            Ok(())
        })?;
        return emit(common.out.as_deref(), &bytes);
    }
    write_report(common, "pareto", args, None, report)
}

#[derive(Serialize)]
struct VerifyResult {
    passed: bool,
    checks: Vec<IdentityCheck>,
}

/// Extra checks on a user-supplied model and system.
fn model_checks(model: &TrajectoryModel, system: &System, exec: Exec) -> CliResult<Vec<IdentityCheck>> {
    let te = total_expectation_gap(model, system)?;
    let (og, exact) = oracle_gap(model, system)?;
    let core = system_core_with(model, &TokenString::root(), system, exec)?;
    Ok(vec![
        IdentityCheck {
            name: "model_total_expectation".into(),
            passed: te <= 1e-12,
            detail: format!("max gap {te:e}"),
        },
        IdentityCheck {
            name: "model_oracle_equivalence".into(),
            passed: og <= 1e-12 && exact,
            detail: format!("max float gap {og:e}, rational agreement {exact}, core {:?}", core.values),
        },
    ])
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    let common = &args.common;
    let mut checks = verify_suite();
    if common.model.is_some() {
        let (model, system) = model_and_system(common)?;
        checks.extend(model_checks(&model, &system, common.exec())?);
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    if common.format == Some(Format::Csv) {
        let header = vec!["name".to_owned(), "passed".to_owned(), "detail".to_owned()];
        let bytes = csv_bytes(&header, |w| {
            for c in &checks {
                w.write_record([c.name.clone(), c.passed.to_string(), c.detail.clone()])?;
            }
            Ok(())
        })?;
        emit(common.out.as_deref(), &bytes)?;
    } else {
        write_report(common, "verify", args, None, VerifyResult { passed: failed.is_empty(), checks })?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Identity(failed.join(", ")))
    }
}
