use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qsylv::problems::laplace_log;
use qsylv::solvers::{integral_solve, sign_solve, IntegralOptions, SignOptions};
use qsylv::HodlrConfig;

// Sequential vs concurrent quadrature-term evaluation. Without the `parallel`
// feature both variants run the sequential path.
fn integral_modes(c: &mut Criterion) {
    let cfg = HodlrConfig { block_size: 64, ..HodlrConfig::default() };
    let mut group = c.benchmark_group("integral_solve");
    group.sample_size(10);
    for n in [256usize, 512] {
        let prob = laplace_log(n, 1.0, &cfg).unwrap();
        for parallel in [false, true] {
            let opts = IntegralOptions { parallel, ..IntegralOptions::default() };
            let id = BenchmarkId::new(if parallel { "parallel" } else { "sequential" }, n);
            group.bench_with_input(id, &prob, |b, p| b.iter(|| black_box(integral_solve(p, &cfg, &opts).unwrap())));
        }
    }
    group.finish();
}

fn sign_baseline(c: &mut Criterion) {
    let cfg = HodlrConfig { block_size: 64, ..HodlrConfig::default() };
    let mut group = c.benchmark_group("sign_solve");
    group.sample_size(10);
    for n in [256usize, 512] {
        let prob = laplace_log(n, 1.0, &cfg).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &prob, |b, p| {
            b.iter(|| black_box(sign_solve(p, &cfg, &SignOptions::default()).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, integral_modes, sign_baseline);
criterion_main!(benches);
