//! Criterion benchmarks for quadrature, G0 fitting and feature extraction.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion, Throughput};
use gsc_core::distributions::sample_g0;
use gsc_core::features::{window_features, FeatureConfig};
use gsc_core::information::{hellinger_distance, shannon_entropy};
use gsc_core::simulate::REFERENCE_CLASSES;
use gsc_core::specfun::QuadratureConfig;
use gsc_core::{default_scene, extract_features, fit_g0_mle, G0Params, GammaParams, SolverConfig};

const LOOKS: f64 = 4.0;

fn classes() -> impl Iterator<Item = (&'static str, G0Params, GammaParams)> {
    REFERENCE_CLASSES.iter().map(|&(name, alpha, gamma)| {
        let p = G0Params::new(alpha, gamma, LOOKS).unwrap();
        let q = GammaParams::new(gamma / (-alpha - 1.0), LOOKS).unwrap();
        (name, p, q)
    })
}

pub fn quadrature(c: &mut Criterion) {
    let cfg = QuadratureConfig::default();
    let mut group = c.benchmark_group("quadrature");
    for (name, p, q) in classes() {
        group.bench_with_input(BenchmarkId::new("entropy", name), &p, |b, p| {
            b.iter(|| shannon_entropy(black_box(p), &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("hellinger", name), &(p, q), |b, (p, q)| {
            b.iter(|| hellinger_distance(black_box(p), black_box(q), &cfg).unwrap())
        });
    }
    group.finish();
}

pub fn fitting(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("fit");
    for n in [49, 10_201] {
        for (name, p, _) in classes() {
            let z = sample_g0(&p, n, 1).unwrap();
            group.throughput(Throughput::Elements(n as u64));
            group.bench_with_input(BenchmarkId::new(format!("{name}/n"), n), &z, |b, z| {
                b.iter(|| fit_g0_mle(black_box(z), LOOKS, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

pub fn features(c: &mut Criterion) {
    let cfg = FeatureConfig::default();
    let mut group = c.benchmark_group("features");
    for (name, p, _) in classes() {
        let z = sample_g0(&p, 49, 2).unwrap();
        group.bench_with_input(BenchmarkId::new("window", name), &z, |b, z| {
            b.iter(|| window_features(black_box(z), LOOKS, &cfg))
        });
    }
    let [hh, _, _] = default_scene(42).render().unwrap();
    group.sample_size(10);
    group.throughput(Throughput::Elements((hh.width() * hh.height()) as u64));
    for threads in [1, 0] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let label = if threads == 0 {
            "all".to_string()
        } else {
            threads.to_string()
        };
        group.bench_function(BenchmarkId::new("phantom-303x101/threads", label), |b| {
            b.iter(|| pool.install(|| extract_features(black_box(&hh), &cfg).unwrap()))
        });
    }
    group.finish();
}
