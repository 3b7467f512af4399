//! Sequential vs data-parallel execution of the hot loops. Outputs are
//! identical in both modes; only wall time differs.

use std::collections::BTreeMap;
use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use xenodiv::cores::{estimate_core_mc_with, system_core_with};
use xenodiv::model::{Alphabet, Intervention, Next, TokenString, TrajectoryModel, Transform};
use xenodiv::orientation::deviance_stats_with;
use xenodiv::structures::{DiffMetric, Structure, System};
use xenodiv::xeno::{score_candidates, ConstraintSystems, ScoreConfig};
use xenodiv::Exec;

/// Complete tree over four tokens: stop with 0.2 at every prefix, forced
/// stop at the depth limit. About 22k trajectories.
fn bushy_tree(max_len: usize) -> TrajectoryModel {
    let alphabet = Arc::new(Alphabet::new(["a", "b", "c", "d"]).unwrap());
    let mut branches = BTreeMap::new();
    let mut frontier = vec![TokenString::root()];
    while let Some(prefix) = frontier.pop() {
        let row = if prefix.len() + 2 > max_len {
            vec![0.0, 0.0, 0.0, 0.0, 1.0]
        } else {
            for t in 0..4 {
                frontier.push(prefix.child(Next::Token(t)));
            }
            vec![0.2; 5]
        };
        branches.insert(prefix, row);
    }
    TrajectoryModel::new(alphabet, max_len, branches).unwrap()
}

fn system() -> System {
    System::new(vec![
        Structure::token_indicator("has_a", 0),
        Structure::ngram_indicator("ab", vec![0, 1]),
        Structure::ngram_indicator("dc", vec![3, 2]),
    ])
    .unwrap()
}

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench(c: &mut Criterion) {
    let model = bushy_tree(9);
    let sys = system();
    let root = TokenString::root();

    let mut g = c.benchmark_group("monte_carlo_core");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| estimate_core_mc_with(&model, &root, &sys, black_box(20_000), 7, exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("exact_evaluation");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                let core = system_core_with(&model, &root, &sys, exec).unwrap();
                let stats = deviance_stats_with(&model, &root, &sys, DiffMetric::L2norm, exec).unwrap();
                black_box((core, stats))
            })
        });
    }
    g.finish();

    let small = bushy_tree(7);
    let candidates: Vec<Intervention> = (1..=8)
        .map(|k| Intervention::new(format!("t{k}"), vec![Transform::Temperature(0.5 * f64::from(k))]))
        .collect();
    let cfg = ScoreConfig::default();
    let mut g = c.benchmark_group("candidate_scoring");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                score_candidates(&small, &root, &sys, &ConstraintSystems::default(), &candidates, &cfg, exec).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
