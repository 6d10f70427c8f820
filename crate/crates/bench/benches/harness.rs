use criterion::{criterion_group, criterion_main, Criterion};
use rvfl_bench::{dataset, hidden_layer};
use rvfl_core::{
    hidden_output, run_trial, Configuration, ExperimentConfig, GridSpec, InitStrategy, StrategyKind,
    TargetFunction,
};

fn hidden(c: &mut Criterion) {
    let data = dataset(2, 2000);
    let mut group = c.benchmark_group("hidden_output");
    group.sample_size(20);
    for (name, strategy) in [
        ("Gs", InitStrategy::Gs { u: 1.0 }),
        ("Gu", InitStrategy::Gu { u: 1.0 }),
        ("Galpha", InitStrategy::GAlpha { alpha_min: 15.0, alpha_max: 75.0 }),
    ] {
        let layer = hidden_layer(&data, 500, &strategy);
        group.bench_function(name, |b| b.iter(|| hidden_output(&layer, &data.x).unwrap()));
    }
    group.finish();
}

fn trial(c: &mut Criterion) {
    let mut cfg = ExperimentConfig::new(TargetFunction::Nlf, 2);
    cfg.n_train = 500;
    cfg.n_test = 2000;
    cfg.grids = GridSpec {
        m_values: vec![5, 20, 50],
        u_values: vec![1.0, 5.0],
        alpha_min_values: vec![0.0, 45.0],
        alpha_step: 45.0,
    };
    let mut group = c.benchmark_group("grid_trial");
    group.sample_size(10);
    for kind in StrategyKind::ALL {
        group.bench_function(kind.as_str(), |b| {
            b.iter(|| run_trial(&cfg, Configuration::WithLinksWithBias, kind, 0))
        });
    }
    group.finish();
}

criterion_group!(benches, hidden, trial);
criterion_main!(benches);
