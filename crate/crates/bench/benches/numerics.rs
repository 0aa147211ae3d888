use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use evmanifold::manifold::{default_q_grid, default_x_grid};
use evmanifold::spectral::{self, quad, GaussQuadRule, LnSpectral};
use evmanifold::{build_manifold, conditional_quantile, sample_pairs, EvModel, SolverConfig};

fn quadrature(c: &mut Criterion) {
    c.bench_function("gauss_hermite 96", |b| {
        b.iter(|| GaussQuadRule::gauss_hermite(black_box(96)).unwrap())
    });
    let rule = GaussQuadRule::gauss_hermite(quad::DEFAULT_NODES).unwrap();
    let m = LnSpectral::new(1.0).unwrap();
    c.bench_function("spectral_moment checked", |b| {
        b.iter(|| spectral::spectral_moment(black_box(&m), &rule).unwrap())
    });
    c.bench_function("exponent_integral", |b| {
        b.iter(|| spectral::exponent_integral(black_box(2.0), black_box(0.7), &m).unwrap())
    });
    c.bench_function("ln_joint_density", |b| {
        b.iter(|| spectral::ln_joint_density(black_box(2.0), black_box(0.7), &m).unwrap())
    });
}

fn solver(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let models = [
        ("logistic", EvModel::logistic(0.9).unwrap()),
        ("hr", EvModel::husler_reiss(0.1).unwrap()),
        ("ct", EvModel::coles_tawn(0.5, 100.0).unwrap()),
        ("semiparam", EvModel::semiparam(1.0).unwrap()),
    ];
    for (name, m) in models {
        c.bench_function(&format!("conditional_quantile {name}"), |b| {
            b.iter(|| conditional_quantile(&m, black_box(0.5), black_box(20.0), &cfg).unwrap())
        });
    }
}

fn manifolds(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_manifold default grid");
    group.sample_size(10);
    let cfg = SolverConfig::default();
    let q = default_q_grid();
    let x = default_x_grid();
    let ct = EvModel::coles_tawn(0.5, 100.0).unwrap();
    group.bench_function("ct", |b| b.iter(|| build_manifold(&ct, &q, &x, &cfg).unwrap()));
    let ln = EvModel::semiparam(1.0).unwrap();
    group.bench_function("semiparam", |b| b.iter(|| build_manifold(&ln, &q, &x, &cfg).unwrap()));
    group.finish();
}

fn fitting(c: &mut Criterion) {
    let mut group = c.benchmark_group("sigma fit");
    group.sample_size(10);
    let (x, y) = sample_pairs(&EvModel::semiparam(1.0).unwrap(), 500, 1).unwrap();
    group.bench_function("fit_sigma_mle 500 pairs", |b| {
        b.iter(|| spectral::fit_sigma_mle(&x, &y, spectral::DEFAULT_SIGMA_BOUNDS).unwrap())
    });
    group.finish();
}

criterion_group!(benches, quadrature, solver, manifolds, fitting);
criterion_main!(benches);
