use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use voltasym::arch::{delta_sequence, ArchModel, BFamily};
use voltasym::matseq::{convolve, MatSeq};
use voltasym::synth::random_matrix_kernel;
use voltasym::volterra::solve_resolvent;

fn bench_convolve(c: &mut Criterion) {
    let mut g = c.benchmark_group("convolve");
    for &len in &[256usize, 1024] {
        let u = random_matrix_kernel(1, 3, len, 0.5);
        let v = random_matrix_kernel(2, 3, len, 0.5);
        g.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            b.iter(|| convolve(&u, &v).unwrap())
        });
    }
    g.finish();
}

fn bench_resolvent(c: &mut Criterion) {
    let mut g = c.benchmark_group("resolvent");
    for &n in &[1000usize, 4000] {
        let u = MatSeq::scalar_from_fn(n, |k| 0.5 / ((k + 1) * (k + 1)) as f64);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_resolvent(&u, n - 1).unwrap())
        });
    }
    g.finish();
}

fn bench_delta(c: &mut Criterion) {
    let m = ArchModel {
        intercept: 1.0,
        b: BFamily::TwoPeriodicPoly { a_odd: 0.5, a_even: 0.25, alpha: 2.0 },
        lambda1: 1.0,
        lambda2: None,
        variance: None,
    };
    c.bench_function("delta_4000", |b| b.iter(|| delta_sequence(&m, 4000).unwrap()));
}

criterion_group!(benches, bench_convolve, bench_resolvent, bench_delta);
criterion_main!(benches);
