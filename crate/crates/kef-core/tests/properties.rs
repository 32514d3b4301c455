//! Property tests for the triplet algebra and measure machinery on
//! randomized inputs from the supported family.

use kef_core::levy::{kill, u_to_xi, xi_to_u, Iv, LevyMeasure, LevyTriplet};
use kef_core::quad::Tol;
use num_complex::Complex64;
use proptest::prelude::*;

fn arb_measure() -> impl Strategy<Value = LevyMeasure> {
    let atom = (0.1f64..3.0, 0.05f64..2.0, prop::bool::ANY).prop_map(|(p, m, neg)| {
        LevyMeasure::atoms(vec![(if neg { -p } else { p }, m)])
    });
    let two_atoms = (0.1f64..2.5, 0.1f64..2.5, 0.05f64..1.5, 0.05f64..1.5)
        .prop_map(|(p1, p2, m1, m2)| LevyMeasure::atoms(vec![(p1, m1), (-p2, m2)]));
    let tse = (0.5f64..4.0, 0.0f64..2.0, 0.0f64..2.0).prop_map(|(rate, sn, sp)| {
        LevyMeasure::TwoSidedExp {
            rate,
            scale_neg: sn,
            scale_pos: sp,
        }
    });
    let cp = (0.1f64..3.0, 0.5f64..4.0).prop_map(|(intensity, jump_rate)| {
        LevyMeasure::CompoundPoissonExp {
            intensity,
            jump_rate,
        }
    });
    let ml = (0.25f64..0.75).prop_map(|alpha| LevyMeasure::MlSubordinator { alpha });
    prop_oneof![
        Just(LevyMeasure::Zero),
        atom,
        two_atoms,
        tse,
        cp,
        ml,
    ]
}

fn arb_triplet() -> impl Strategy<Value = LevyTriplet> {
    (0.0f64..4.0, -2.0f64..2.0, arb_measure())
        .prop_map(|(sigma2, gamma, nu)| LevyTriplet::new(sigma2, nu, gamma).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn char_exponent_vanishes_at_zero_and_is_hermitian(t in arb_triplet()) {
        let psi0 = t.char_exponent(0.0).unwrap();
        prop_assert!(psi0.norm() < 1e-10, "psi(0) = {psi0}");
        for &z in &[0.3, 1.1, 2.7] {
            let a = t.char_exponent(z).unwrap();
            let b = t.char_exponent(-z).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-8 * (1.0 + a.norm()),
                "psi({z}) = {a}, psi(-{z}) = {b}");
        }
    }

    #[test]
    fn u_roundtrip_recovers_xi(t in arb_triplet()) {
        let u = xi_to_u(&t).unwrap();
        let back = u_to_xi(&u).unwrap();
        prop_assert!((back.sigma2 - t.sigma2).abs() < 1e-12);
        prop_assert!((back.gamma - t.gamma).abs() < 1e-10 * (1.0 + t.gamma.abs()),
            "gamma {} -> {}", t.gamma, back.gamma);
        // jump measure recovered: compare tails on a spot grid
        for &x in &[0.2, 0.7, 1.4, 2.6] {
            let orig_p = t.nu.mass_above(x, true);
            let back_p = back.nu.mass_above(x, true);
            if orig_p.is_finite() {
                prop_assert!((orig_p - back_p).abs() < 1e-9 * (1.0 + orig_p));
            }
            let orig_m = t.nu.mass_below(-x, true);
            let back_m = back.nu.mass_below(-x, true);
            if orig_m.is_finite() {
                prop_assert!((orig_m - back_m).abs() < 1e-9 * (1.0 + orig_m));
            }
        }
    }

    #[test]
    fn killing_shifts_char_exponent_by_killing_atom(t in arb_triplet(), q in 0.1f64..3.0) {
        let u = xi_to_u(&t).unwrap();
        let ut = kill(&u, q).unwrap();
        for &z in &[0.5, 1.7, -2.3] {
            let lhs = ut.char_exponent(z).unwrap();
            let rhs = u.char_exponent(z).unwrap() + q * (Complex64::new(0.0, -z).exp() - 1.0);
            prop_assert!((lhs - rhs).norm() < 1e-8 * (1.0 + rhs.norm()),
                "z={z}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn gamma0_consistent_with_gamma(t in arb_triplet()) {
        let small = t.nu.small_signed_moment(Tol::default()).unwrap();
        prop_assert!((t.gamma - (t.gamma0.unwrap() + small)).abs() < 1e-9,
            "gamma {} vs drift {} + {}", t.gamma, t.gamma0.unwrap(), small);
    }

    #[test]
    fn tails_are_nonincreasing_and_integrability_holds(t in arb_triplet()) {
        let mut prev_p = f64::INFINITY;
        let mut prev_m = f64::INFINITY;
        for i in 1..20 {
            let x = 0.2 * i as f64;
            let p = t.nu.mass_above(x, true);
            let m = t.nu.mass_below(-x, true);
            prop_assert!(p <= prev_p + 1e-12 && m <= prev_m + 1e-12);
            prev_p = p;
            prev_m = m;
        }
        let min1x2 = t.nu.min1_x2(Tol::default()).unwrap();
        prop_assert!(min1x2.is_finite() && min1x2 >= 0.0);
    }

    #[test]
    fn image_tails_match_pullback(t in arb_triplet()) {
        let u_nu = t.nu.map(kef_core::levy::JumpMap::ExpM1Neg);
        for &x in &[0.15, 0.45, 0.8] {
            // ν_U((-∞,-x)) = ν_ξ((-ln(1-x), ∞)) for x ∈ (0,1)
            let lhs = u_nu.mass_below(-x, true);
            let rhs = t.nu.mass_above(-(-x).ln_1p(), true);
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs().min(1e6)));
            // ν_U((y,∞)) = ν_ξ((-∞, -ln(1+y))) for y > 0
            let lhs = u_nu.mass_above(x, true);
            let rhs = t.nu.mass_below(-x.ln_1p(), true);
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs().min(1e6)));
        }
    }

    #[test]
    fn second_moment_condition_monotone_in_q(t in arb_triplet()) {
        // if the condition holds at q it holds at every larger q
        let eta = LevyTriplet::brownian(1.0, 0.0);
        let small = kef_core::levy::second_moment_condition(&t, &eta, 0.5).unwrap();
        let large = kef_core::levy::second_moment_condition(&t, &eta, 50.0).unwrap();
        if small {
            prop_assert!(large);
        }
    }
}

#[test]
fn roundtrip_fixed_corpus_tight() {
    // a deterministic sweep at tight tolerance over each family
    let measures = vec![
        LevyMeasure::Zero,
        LevyMeasure::atoms(vec![(1.0, 0.7)]),
        LevyMeasure::atoms(vec![(-0.4, 0.3), (2.0, 0.2)]),
        LevyMeasure::TwoSidedExp {
            rate: 2.0,
            scale_neg: 0.5,
            scale_pos: 1.5,
        },
        LevyMeasure::CompoundPoissonExp {
            intensity: 1.0,
            jump_rate: 1.0,
        },
        LevyMeasure::MlSubordinator { alpha: 0.5 },
    ];
    for nu in measures {
        for &(s2, g) in &[(0.0, 0.3), (2.0, -1.1), (4.0, 0.0)] {
            let t = LevyTriplet::new(s2, nu.clone(), g).unwrap();
            let back = u_to_xi(&xi_to_u(&t).unwrap()).unwrap();
            assert!(
                (back.gamma - g).abs() < 1e-10,
                "{nu:?} ({s2},{g}): {} vs {g}",
                back.gamma
            );
        }
    }
}

#[test]
fn ml_truncated_moments_monotone_in_eps() {
    let nu = LevyMeasure::MlSubordinator { alpha: 0.5 };
    let mut prev = 0.0;
    for &eps in &[1e-5, 1e-4, 1e-3, 1e-2] {
        let m = nu.truncated_mean(eps, Tol::default()).unwrap();
        assert!(m >= prev);
        prev = m;
    }
    // and the tail + truncated mass adds up near the cutoff
    let t1 = nu.integrate(&|_| 1.0, Iv::new(1e-3, 1.0, true, true), Tol::default())
        .unwrap()
        .value;
    let t2 = nu.mass_above(1e-3, false) - nu.mass_above(1.0, true);
    assert!((t1 - t2).abs() < 1e-7 * t2);
}
