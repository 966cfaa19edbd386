use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nlsh_core::concentration::best_center;
use nlsh_core::functionals::gn_ratio_with_constant;
use nlsh_core::ground_state::{mass_sweep, SolverOptions};
use nlsh_core::{CartesianGridSpec, ExecPolicy, Field, RadialGridSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POLICIES: [(&str, ExecPolicy); 2] = [
    ("sequential", ExecPolicy::Sequential),
    ("parallel", ExecPolicy::Parallel),
];

fn random_fields(n: usize) -> Vec<Field> {
    let grid = Arc::new(
        CartesianGridSpec {
            d: 3,
            m: 16,
            l: 4.0,
            c: 0.1,
        }
        .build()
        .unwrap(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    (0..n)
        .map(|_| {
            let v = (0..grid.len())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            Field::new(nlsh_core::Grid::Cartesian(grid.clone()), v).unwrap()
        })
        .collect()
}

fn bench_best_center(c: &mut Criterion) {
    let grid = Arc::new(
        CartesianGridSpec {
            d: 3,
            m: 32,
            l: 8.0,
            c: 0.1,
        }
        .build()
        .unwrap(),
    );
    let f = Field::cartesian(&grid, |x| {
        let r2: f64 = x
            .iter()
            .zip([1.3, -2.1, 0.4])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Complex64::new((-r2).exp(), 0.0)
    });
    let mut group = c.benchmark_group("best_center");
    group.sample_size(10);
    for (name, policy) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &policy, |b, &p| {
            b.iter(|| best_center(&f, 1.0, p).unwrap())
        });
    }
    group.finish();
}

fn bench_gn_batch(c: &mut Criterion) {
    let fields = random_fields(64);
    let mut group = c.benchmark_group("gn_batch");
    for (name, policy) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &policy, |b, &p| {
            b.iter(|| p.map(&fields, |f| gn_ratio_with_constant(f, 1.0).unwrap()))
        });
    }
    group.finish();
}

fn bench_mass_sweep(c: &mut Criterion) {
    let base = RadialGridSpec::new(3, 0.1, 1024, 30.0);
    let couplings = [0.02, 0.05, 0.1, 0.15, 0.2, 0.22];
    let mut group = c.benchmark_group("mass_sweep");
    group.sample_size(10);
    for (name, policy) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &policy, |b, &p| {
            b.iter(|| mass_sweep(base, &couplings, SolverOptions::default(), p))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_best_center, bench_gn_batch, bench_mass_sweep);
criterion_main!(benches);
