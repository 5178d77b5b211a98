use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qplab_core::dynamics::{tridiag_det_bruteforce, tridiag_det_closed};
use qplab_core::lax::lax_residual;
use qplab_core::{SampleOptions, Scalar, Snapshot};

fn start(n: usize) -> Snapshot {
    Snapshot::sample(n, 42, &SampleOptions::default()).expect("sample")
}

fn steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for n in [1, 2, 4, 8] {
        let s = start(n);
        let next = s.forward().unwrap();
        group.bench_with_input(BenchmarkId::new("forward", n), &s, |b, s| b.iter(|| black_box(s).forward().unwrap()));
        group.bench_with_input(BenchmarkId::new("backward", n), &next, |b, s| b.iter(|| black_box(s).backward().unwrap()));
    }
    group.finish();
}

fn orbit_growth(c: &mut Criterion) {
    // Coefficient size grows along an orbit, so later steps cost more.
    let mut group = c.benchmark_group("forward_after_k_steps");
    let mut s = start(2);
    for k in 0..=6 {
        if k % 3 == 0 {
            group.bench_with_input(BenchmarkId::from_parameter(k), &s, |b, s| b.iter(|| black_box(s).forward().unwrap()));
        }
        s = s.forward().unwrap();
    }
    group.finish();
}

fn determinant(c: &mut Criterion) {
    let mut group = c.benchmark_group("tridiag_det");
    for n in [2, 4, 8] {
        let s = start(n);
        group.bench_with_input(BenchmarkId::new("closed", n), &s, |b, s| {
            b.iter(|| tridiag_det_closed(&s.state, &s.params).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("bruteforce", n), &s, |b, s| {
            b.iter(|| tridiag_det_bruteforce(&s.state, &s.params).unwrap())
        });
    }
    group.finish();
}

fn lax(c: &mut Criterion) {
    let mut group = c.benchmark_group("lax_residual");
    let z = Scalar::ratio(3, 7).unwrap();
    for n in [1, 2, 3] {
        let s = start(n);
        let next = s.forward().unwrap();
        let (prev, cur) = (s.frame().unwrap(), next.frame().unwrap());
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| lax_residual(&cur, &prev, &next.params, black_box(&z)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, steps, orbit_growth, determinant, lax);
criterion_main!(benches);
