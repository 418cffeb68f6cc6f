//! Hot-path benchmarks: the right-hand side (inner loop of every
//! integration), the scalar equilibrium solve, the 4x4 eigenvalue
//! extraction, and a short adaptive trajectory segment.

use std::hint::black_box;

use clapp_core::{
    eigenvalues, jacobian, rhs, simulate, solve_equilibrium, BjtParams, CircuitParams,
    IntegratorConfig, State,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn reference() -> (CircuitParams, BjtParams) {
    let circuit =
        CircuitParams::new(2e-12, 2e-12, 0.1e-12, 0.753e-9, 5e3, 7e3, 500.0, 12.0).unwrap();
    let bjt = BjtParams::new(47.1e-12, 100.0, 0.7894, 0.02585).unwrap();
    (circuit, bjt)
}

fn bench_rhs(c: &mut Criterion) {
    let (circuit, bjt) = reference();
    let p = State::new(0.75, 3.1, 3.85, 2.4e-3);
    c.bench_function("rhs_forward_bias", |b| {
        b.iter(|| rhs(black_box(&circuit), black_box(&bjt), black_box(&p)).unwrap())
    });
}

fn bench_equilibrium(c: &mut Criterion) {
    let (circuit, bjt) = reference();
    c.bench_function("solve_equilibrium", |b| {
        b.iter(|| solve_equilibrium(black_box(&circuit), black_box(&bjt), 1e-12).unwrap())
    });
}

fn bench_eigenvalues(c: &mut Criterion) {
    let (circuit, bjt) = reference();
    let eq = solve_equilibrium(&circuit, &bjt, 1e-12).unwrap();
    let j = jacobian(&circuit, &bjt, &eq.state).unwrap();
    c.bench_function("eigenvalues_4x4", |b| {
        b.iter(|| eigenvalues(black_box(&j)).unwrap())
    });
}

fn bench_simulate(c: &mut Criterion) {
    let (circuit, bjt) = reference();
    let eq = solve_equilibrium(&circuit, &bjt, 1e-12).unwrap();
    let mut p0 = eq.state;
    p0.v_c1 += 1e-3;
    let cfg = IntegratorConfig {
        t_end: 1e-9,
        sample_interval: 1e-10,
        ..IntegratorConfig::default()
    };
    c.bench_function("simulate_1ns", |b| {
        b.iter(|| simulate(black_box(&circuit), black_box(&bjt), black_box(p0), &cfg).unwrap())
    });
}

criterion_group!(
    benches,
    bench_rhs,
    bench_equilibrium,
    bench_eigenvalues,
    bench_simulate
);
criterion_main!(benches);
