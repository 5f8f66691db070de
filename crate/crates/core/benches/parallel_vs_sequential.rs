use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ultrajet::extension_engine::{assemble, dyadic_samples, gevrey_jet, random_samples, rows_for, verify_bounds, PlanOptions};
use ultrajet::trend::geometric_grid;
use ultrajet::ultrajets::certify_at;
use ultrajet::weight_functions::{kappa_on_grid, WeightFunction};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let all = rayon::current_num_threads();
    vec![
        ("sequential", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", rayon::ThreadPoolBuilder::new().num_threads(all).build().unwrap()),
    ]
}

fn kappa(c: &mut Criterion) {
    let w = WeightFunction::power(0.5).unwrap();
    let grid = geometric_grid(1.0, 1e6, 256);
    let mut g = c.benchmark_group("kappa_on_grid_256");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| kappa_on_grid(&w, &grid).unwrap()))
        });
    }
    g.finish();
}

fn bounds(c: &mut Criterion) {
    let rows = rows_for(&WeightFunction::power(0.5).unwrap(), 1.0).unwrap();
    let jet = gevrey_jet(&rows, 40).unwrap();
    let cert = certify_at(&jet, &rows.v, 1.0).unwrap();
    let f = assemble(&jet, &cert, &rows, &PlanOptions::new(16.0)).unwrap();
    let mut xs = dyadic_samples(&f, 40);
    xs.extend(random_samples(&f, 2000, 1));
    let mut g = c.benchmark_group("verify_bounds_alpha8");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| verify_bounds(&f, &xs, 8).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, kappa, bounds);
criterion_main!(benches);
