use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use std::f64::consts::PI;

use induced_contraction::design::{kapitza_design, lorenz_symmetric_part, max_symmetric_eigenvalue};
use induced_contraction::integrate::{integrate, StepPolicy};
use induced_contraction::models::{Kapitza, Lorenz};
use induced_contraction::par;

fn kapitza_final_angle(params: &Kapitza, angle: f64) -> f64 {
    let omega = 1000.0;
    let design = kapitza_design(params, &[0.8 * PI], omega).expect("design");
    let x0 = [angle, design.amplitude * omega];
    let policy = StepPolicy::Rk4 { h: 2.0 * PI / (100.0 * omega) };
    let traj = integrate(params, &design.input, 0.0, 2.0, &x0, &policy).expect("integration");
    traj.state(traj.len() - 1)[0]
}

fn kapitza_sweep(c: &mut Criterion) {
    let params = Kapitza::new(1.0, 1.0, 1.0);
    let angles: Vec<f64> = (0..16).map(|i| PI + 0.02 * i as f64).collect();
    let mut group = c.benchmark_group("kapitza_initial_angle_sweep");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", angles.len()), |b| {
        b.iter(|| par::map_sequential(black_box(&angles), |a| kapitza_final_angle(&params, *a)))
    });
    group.bench_function(BenchmarkId::new("parallel", angles.len()), |b| {
        b.iter(|| par::map(black_box(&angles), |a| kapitza_final_angle(&params, *a)))
    });
    group.finish();
}

fn lorenz_region(c: &mut Criterion) {
    let model = Lorenz::classic();
    let points: Vec<[f64; 3]> = (0..20_000)
        .map(|i| {
            let s = i as f64 * 0.618_033_988_75;
            [40.0 * (s.fract() - 0.5), 10.0 * (3.0 * s).sin(), 25.0 + 5.0 * (7.0 * s).cos()]
        })
        .collect();
    let eig = |p: &[f64; 3]| max_symmetric_eigenvalue(&lorenz_symmetric_part(&model, *p));
    let mut group = c.benchmark_group("lorenz_symmetric_eigenvalues");
    group.bench_function(BenchmarkId::new("sequential", points.len()), |b| {
        b.iter(|| par::map_sequential(black_box(&points), eig))
    });
    group.bench_function(BenchmarkId::new("parallel", points.len()), |b| {
        b.iter(|| par::map(black_box(&points), eig))
    });
    group.finish();
}

criterion_group!(benches, kapitza_sweep, lorenz_region);
criterion_main!(benches);
