use std::hint::black_box;

use corridor_core::analysis::hausdorff;
use corridor_core::bvp::{jacobian, residual, solve};
use corridor_core::exact::solve_exact;
use corridor_core::gspt::{build_singular_orbit, classify, sample_orbit, DEFAULT_CURVE_TOL};
use corridor_core::{BvpProblem, WidthProfile};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn closing() -> WidthProfile {
    WidthProfile::linear(2.0, 1.0, 1.0).unwrap()
}

fn newton(c: &mut Criterion) {
    let mut group = c.benchmark_group("continuation_solve");
    group.sample_size(10);
    for eps in [1e-1, 1e-2, 1e-3] {
        let p = BvpProblem::new(closing(), 0.5, 0.8, eps, None).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(eps), &p, |b, p| b.iter(|| solve(black_box(p)).unwrap()));
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let p = BvpProblem::new(closing(), 0.5, 0.8, 1e-3, None).unwrap();
    let rho: Vec<f64> = (0..p.n_nodes()).map(|i| 0.3 + 0.4 * (i as f64 * 0.001).sin().abs()).collect();
    c.bench_function("residual_40k", |b| b.iter(|| residual(&p, black_box(&rho)).unwrap()));
    c.bench_function("jacobian_40k", |b| b.iter(|| jacobian(&p, black_box(&rho)).unwrap()));
}

fn closed_forms(c: &mut Criterion) {
    c.bench_function("solve_exact", |b| b.iter(|| solve_exact(black_box(0.3), black_box(0.6), 1e-2, 1.0).unwrap()));
    c.bench_function("classify", |b| b.iter(|| classify(2.0, 1.0, black_box(0.5), black_box(0.8), DEFAULT_CURVE_TOL).unwrap()));
    let k = closing();
    c.bench_function("build_singular_orbit", |b| b.iter(|| build_singular_orbit(&k, black_box(0.5), black_box(0.8)).unwrap()));
}

fn distance(c: &mut Criterion) {
    let k = closing();
    let p = BvpProblem::new(k.clone(), 0.5, 0.8, 1e-2, None).unwrap();
    let sol = solve(&p).unwrap();
    let curve: Vec<(f64, f64)> = sol.nodes.iter().copied().zip(sol.rho.iter().copied()).collect();
    let orbit = build_singular_orbit(&k, 0.5, 0.8).unwrap();
    let sampled = sample_orbit(&orbit, &k, 10 * sol.n_cells()).unwrap();
    let mut group = c.benchmark_group("hausdorff");
    group.sample_size(10);
    group.bench_function("solution_vs_orbit", |b| b.iter(|| hausdorff(black_box(&curve), black_box(&sampled))));
    group.finish();
}

criterion_group!(benches, newton, assembly, closed_forms, distance);
criterion_main!(benches);
