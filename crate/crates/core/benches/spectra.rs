use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ep_atlas::collectivity::b_curve_with;
use ep_atlas::ep::find_eps_with;
use ep_atlas::model::{build_picket_fence, Angle};
use ep_atlas::par::Execution;

fn policies() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn b_curves(c: &mut Criterion) {
    let mut g = c.benchmark_group("b_curve");
    g.sample_size(10);
    let grid: Vec<f64> = (1..=40).map(|i| 0.025 * i as f64).collect();
    for n in [101, 301] {
        let model = build_picket_fence(n).unwrap();
        for (name, exec) in policies() {
            g.bench_with_input(BenchmarkId::new(name, n), &model, |b, m| {
                b.iter(|| b_curve_with(m, Angle::ZERO, &grid, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn ep_search(c: &mut Criterion) {
    let mut g = c.benchmark_group("find_eps");
    g.sample_size(10);
    let model = build_picket_fence(27).unwrap();
    for (name, exec) in policies() {
        g.bench_function(name, |b| b.iter(|| find_eps_with(&model, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, b_curves, ep_search);
criterion_main!(benches);
