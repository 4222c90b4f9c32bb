use criterion::{criterion_group, criterion_main};

criterion_group!(
    benches,
    gsc_bench::quadrature,
    gsc_bench::fitting,
    gsc_bench::features
);
criterion_main!(benches);
