//! Sequential versus rayon sweeps over the same batch of structure checks.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use infogeo_core::simplex;
use infogeo_core::sweep::{map_par, map_seq};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interior_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..count)
        .map(|_| {
            let w: Vec<f64> = (0..=n).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            w[..n].iter().map(|v| v / s).collect()
        })
        .collect()
}

fn duality_sweep(c: &mut Criterion) {
    let model = simplex::model(3);
    let check = |x: &Vec<f64>| {
        let (e, m) = model.pair_at(x).unwrap();
        model.duality_residual(&e, &m, x).unwrap()
    };
    let mut group = c.benchmark_group("duality_residual");
    for count in [64usize, 512] {
        let points = interior_points(3, count);
        group.bench_with_input(BenchmarkId::new("sequential", count), &points, |b, pts| {
            b.iter(|| map_seq(pts, check))
        });
        group.bench_with_input(BenchmarkId::new("rayon", count), &points, |b, pts| {
            b.iter(|| map_par(pts, check))
        });
    }
    group.finish();
}

criterion_group!(benches, duality_sweep);
criterion_main!(benches);
