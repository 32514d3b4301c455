//! Simulation against closed forms through fully disjoint code paths: the
//! samplers know nothing of the special functions, so agreement validates
//! both sides at once.

use kef_core::est::{self, LawRep};
use kef_core::laws::reference;
use kef_core::levy::{LevyMeasure, LevyTriplet, ProcessSpec, Role};
use kef_core::sim::{batch, SamplerKind, SimConfig};
use serde_json::json;

fn cfg(seed: u64) -> SimConfig {
    SimConfig {
        master_seed: seed,
        ..SimConfig::default()
    }
}

#[test]
fn yor_with_drift_matches_simulation() {
    // ξ = 2B + t, η_t = t, q = 2 against the Beta/Gamma ratio law
    let xi = ProcessSpec::new(LevyTriplet::brownian(4.0, 1.0), Role::Xi);
    let eta = ProcessSpec::new(LevyTriplet::deterministic(1.0), Role::Eta);
    let b = batch(&xi, &eta, 2.0, &cfg(71), SamplerKind::Direct, 50_000).unwrap();
    let y = reference("yor", &json!({"q": 2.0, "b": 1.0})).unwrap();
    let cdf = match &y.law {
        LawRep::ClosedForm(l) => l.cdf.clone().unwrap(),
        _ => unreachable!(),
    };
    let d = est::ks(&b.values, |x| cdf(x)).unwrap();
    assert!(d < 0.015, "KS = {d}");
    // first moment from the invariance identity: E V = 1/(q + b - 2) = 1
    assert!((b.mean() - 1.0).abs() < 4.0 * b.mc_se(), "mean {}", b.mean());
}

#[test]
fn hypergeometric_cf_matches_empirical_cf() {
    // ξ_t = t, η compound Poisson(λ = 2, Exp(1.5) jumps), q = 1
    let (lambda, a, q) = (2.0, 1.5, 1.0);
    let xi = ProcessSpec::new(LevyTriplet::deterministic(1.0), Role::Xi);
    let eta = ProcessSpec::new(
        LevyTriplet::from_drift(
            0.0,
            LevyMeasure::CompoundPoissonExp {
                intensity: lambda,
                jump_rate: a,
            },
            0.0,
        )
        .unwrap(),
        Role::Eta,
    );
    let b = batch(&xi, &eta, q, &cfg(72), SamplerKind::Direct, 50_000).unwrap();
    let h = reference(
        "cf_hypergeom",
        &json!({"lambda": lambda, "gamma_xi": 1.0, "a": a, "q": q}),
    )
    .unwrap();
    let cf = match &h.law {
        LawRep::ClosedForm(l) => l.cf.clone().unwrap(),
        _ => unreachable!(),
    };
    for &u in &[0.4, 1.0, 2.5, 6.0] {
        let emp = est::emp_cf(&b.values, u);
        let closed = cf(u);
        assert!(
            (emp.cf - closed).norm() < 4.0 * emp.se_cf + 1e-4,
            "u={u}: {} vs {closed}",
            emp.cf
        );
    }
}

#[test]
fn mittag_leffler_density_matches_simulation() {
    // the subordinator configuration produces the α = 1/2 law with CDF erf(z/2)
    let alpha = 0.5;
    let q = 1.0 / kef_core::special::gamma_fn(1.0 - alpha);
    let xi = ProcessSpec::new(
        LevyTriplet::from_drift(0.0, LevyMeasure::MlSubordinator { alpha }, 0.0).unwrap(),
        Role::Xi,
    );
    let eta = ProcessSpec::new(LevyTriplet::deterministic(1.0), Role::Eta);
    let b = batch(&xi, &eta, q, &cfg(73), SamplerKind::Direct, 50_000).unwrap();
    let d = est::ks(&b.values, |x| {
        if x <= 0.0 {
            0.0
        } else {
            kef_core::special::erf(x / 2.0)
        }
    })
    .unwrap();
    assert!(d < 0.012, "KS = {d}");
}

#[test]
fn sde_sampler_matches_closed_law_directly() {
    // not only sampler-vs-sampler: the stochastic-exponential route alone
    // reproduces the closed two-Brownian law
    let xi = ProcessSpec::new(LevyTriplet::brownian(4.0, 0.0), Role::Xi);
    let eta = ProcessSpec::new(LevyTriplet::deterministic(1.0), Role::Eta);
    let b = batch(&xi, &eta, 2.0, &cfg(74), SamplerKind::Sde, 50_000).unwrap();
    let law = reference("uniform_over_2exp", &json!({})).unwrap();
    let cdf = match &law.law {
        LawRep::ClosedForm(l) => l.cdf.clone().unwrap(),
        _ => unreachable!(),
    };
    let d = est::ks(&b.values, |x| cdf(x)).unwrap();
    assert!(d < 0.012, "KS = {d}");
}
