use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kef_bench::{bench_config, poisson_bm_pair, two_brownian_pair};
use kef_core::sim::{batch, SamplerKind};

fn bench_samplers(c: &mut Criterion) {
    let cfg = bench_config();
    let mut group = c.benchmark_group("kef_draws");
    group.sample_size(10);

    let (xi, eta) = two_brownian_pair();
    for n in [256usize, 2048] {
        group.bench_with_input(BenchmarkId::new("direct/two_brownian", n), &n, |b, &n| {
            b.iter(|| batch(&xi, &eta, 2.0, &cfg, SamplerKind::Direct, n).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sde/two_brownian", n), &n, |b, &n| {
            b.iter(|| batch(&xi, &eta, 2.0, &cfg, SamplerKind::Sde, n).unwrap())
        });
    }

    let (xi, eta) = poisson_bm_pair();
    group.bench_with_input(BenchmarkId::new("direct/poisson_bm", 2048), &2048usize, |b, &n| {
        b.iter(|| batch(&xi, &eta, 1.0, &cfg, SamplerKind::Direct, n).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_samplers);
criterion_main!(benches);
