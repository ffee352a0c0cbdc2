use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use herglotz::conditions::{el_residual, pmp_residuals};
use herglotz::noether::{check_invariance, DEFAULT_S_VALUES};
use herglotz::{compute_psi_z, shoot, ShootingOptions, TransformationFamily};
use herglotz_bench::{coupled, damped_oscillator, parabola};

fn shooting(c: &mut Criterion) {
    let damp = damped_oscillator();
    let two = coupled();
    let opts = ShootingOptions::default();
    c.bench_function("shoot damped N=1000", |b| {
        b.iter(|| shoot(black_box(&damp), &[0.0], &opts).unwrap())
    });
    c.bench_function("shoot coupled N=1000", |b| {
        b.iter(|| shoot(black_box(&two), &[0.0, 0.0], &opts).unwrap())
    });
}

fn residuals(c: &mut Criterion) {
    let (p, traj) = parabola(1000);
    let mult = compute_psi_z(&p, &traj).unwrap();
    c.bench_function("psi_z N=1000", |b| {
        b.iter(|| compute_psi_z(black_box(&p), &traj).unwrap())
    });
    c.bench_function("el residual N=1000", |b| {
        b.iter(|| el_residual(black_box(&p), &traj).unwrap())
    });
    c.bench_function("pmp residuals N=1000", |b| {
        b.iter(|| pmp_residuals(black_box(&p), &traj, &mult).unwrap())
    });
    let fam = TransformationFamily::from_source(&p, "time-shift", "t + s", &["x1".into()], "z").unwrap();
    c.bench_function("invariance N=1000", |b| {
        b.iter(|| check_invariance(black_box(&p), &fam, &traj, &DEFAULT_S_VALUES).unwrap())
    });
}

criterion_group!(benches, shooting, residuals);
criterion_main!(benches);
