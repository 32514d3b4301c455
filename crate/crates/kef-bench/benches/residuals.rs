use criterion::{criterion_group, criterion_main, Criterion};
use kef_core::disteq::{residual_cf, residual_mu_fv, CheckOpts};
use kef_core::grid;
use kef_core::laws::reference;
use kef_core::levy::{LevyMeasure, LevyTriplet};
use serde_json::json;

fn bench_residuals(c: &mut Criterion) {
    let mut group = c.benchmark_group("residuals");
    group.sample_size(10);

    let opts = CheckOpts {
        tol: 1e-9,
        override_moment_check: false,
    };
    let trivial = reference("trivial_kef", &json!({"gamma": 1.0, "q": 1.0})).unwrap().law;
    let u_grid = grid::log_spaced(0.1, 10.0, 25);
    let det1 = LevyTriplet::deterministic(1.0);
    group.bench_function("cf/trivial_25pts", |b| {
        b.iter(|| residual_cf(&u_grid, &det1, &det1, 1.0, &trivial, &opts).unwrap())
    });

    let laplace = reference("laplace01", &json!({})).unwrap().law;
    let eta = LevyTriplet::from_drift(
        0.0,
        LevyMeasure::TwoSidedExp {
            rate: 1.0,
            scale_neg: 1.0,
            scale_pos: 1.0,
        },
        0.0,
    )
    .unwrap();
    let z_grid = grid::log_symmetric(0.1, 5.0, 8);
    group.bench_function("mu_fv/laplace_16pts", |b| {
        b.iter(|| residual_mu_fv(&z_grid, &det1, &eta, 0.0, &laplace, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_residuals);
criterion_main!(benches);
