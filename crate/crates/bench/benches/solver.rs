use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rvfl_bench::{dataset, design};
use rvfl_core::{pseudoinverse, solve_least_squares, PrefixLeastSquares};

fn least_squares(c: &mut Criterion) {
    let data = dataset(2, 1000);
    let mut group = c.benchmark_group("least_squares");
    group.sample_size(10);
    for m in [50, 200] {
        let d = design(&data, m);
        group.bench_with_input(BenchmarkId::new("direct", m), &d, |b, d| {
            b.iter(|| solve_least_squares(d, &data.y).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("prefix_factor", m), &d, |b, d| {
            b.iter(|| PrefixLeastSquares::new(d, &data.y).unwrap())
        });
        let prefix = PrefixLeastSquares::new(&d, &data.y).unwrap();
        group.bench_with_input(BenchmarkId::new("prefix_solve_all", m), &prefix, |b, p| {
            b.iter(|| (1..=p.max_cols()).step_by(10).map(|k| p.solve(k).unwrap()[0]).sum::<f64>())
        });
    }
    group.finish();
}

fn pinv(c: &mut Criterion) {
    let data = dataset(2, 300);
    let d = design(&data, 100);
    c.bench_function("pseudoinverse_300x103", |b| b.iter(|| pseudoinverse(&d).unwrap()));
}

criterion_group!(benches, least_squares, pinv);
criterion_main!(benches);
