use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use srcox::sim::{generate_dataset, ExperimentConfig};
use srcox::{expand_design, fit, information, partial_log_likelihood, FitOptions, KnotStrategy};

fn likelihood(c: &mut Criterion) {
    let mut group = c.benchmark_group("partial_likelihood");
    for n in [500, 5000] {
        let config = ExperimentConfig::experiment(1, n, 1, 1).unwrap();
        let data = generate_dataset(&config, 0).unwrap();
        let (design, _) = expand_design(&data, &config.sr_spec()).unwrap();
        let beta = vec![0.01; design.ncols()];
        group.bench_with_input(BenchmarkId::new("value", n), &n, |b, _| {
            b.iter(|| partial_log_likelihood(&design, &beta, &data).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("information", n), &n, |b, _| {
            b.iter(|| information(&design, &beta, &data).unwrap())
        });
    }
    group.finish();
}

fn active_set(c: &mut Criterion) {
    let mut group = c.benchmark_group("active_set_fit");
    group.sample_size(20);
    for (label, knots) in [
        ("quantiles10", KnotStrategy::Quantiles(10)),
        ("order_statistics", KnotStrategy::OrderStatistics),
    ] {
        let config = ExperimentConfig::experiment(3, 500, 1, 1).unwrap().with_knots(knots);
        let data = generate_dataset(&config, 0).unwrap();
        let spec = config.sr_spec();
        group.bench_function(label, |b| {
            b.iter(|| fit(&data, &spec, &FitOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, likelihood, active_set);
criterion_main!(benches);
