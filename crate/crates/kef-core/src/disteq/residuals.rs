//! Characteristic-function, Laplace-transform and Laplace-route density
//! equation residuals.

use super::{CheckOpts, LawOps, ResidualReport};
use crate::error::{KefError, Result};
use crate::est::LawRep;
use crate::levy::{kill, second_moment_condition, xi_to_u, Iv, LevyTriplet};
use crate::quad::Tol;
use num_complex::Complex64;

/// Characteristic-function equation: for every `u`,
/// `ψ_η(u) φ(u) = -γ_Ũ u φ'(u) - (σ_Ũ²/2) u² φ''(u)
///               - ∫_{[-1,∞)} (φ(u+uy) - φ(u) - u y φ'(u) 1_{|y|<=1}) ν_Ũ(dy)
///             = -E[e^{iuV} ψ_Ũ(uV)]`.
///
/// Closed-form laws with analytic `φ', φ''` evaluate the `ν_Ũ`-integral form
/// (and cross-check the expectation form when a density is available);
/// empirical laws evaluate the expectation form with the empirical CF.
pub fn residual_cf(
    grid: &[f64],
    xi: &LevyTriplet,
    eta: &LevyTriplet,
    q: f64,
    law: &LawRep,
    opts: &CheckOpts,
) -> Result<ResidualReport> {
    if !opts.override_moment_check && !second_moment_condition(xi, eta, q)? {
        return Err(KefError::precondition(
            "residual_cf: second-moment condition 2E[U₁]+Var(U₁) < q not verified; \
             pass override for laws with asserted finite second moment",
        ));
    }
    let util = kill(&xi_to_u(xi)?, q)?;
    let ops = LawOps::new(law);
    let tol = Tol::default();
    let mut residual = Vec::with_capacity(grid.len());
    let mut budget: f64 = 0.0;
    let mut notes = Vec::new();
    let mut max_cross: f64 = 0.0;

    for &u in grid {
        let psi_eta = eta.char_exponent(u)?;
        let r = if ops.is_empirical() {
            let (phi, _d1, _d2, bud) = ops.cf3(u)?;
            // expectation form with ψ_Ũ evaluated per sample
            let b = match law {
                LawRep::Empirical(b) => b,
                _ => unreachable!(),
            };
            let n = b.values.len() as f64;
            let mut s = Complex64::new(0.0, 0.0);
            let mut s2 = 0.0;
            for &v in &b.values {
                let t = Complex64::new(0.0, u * v).exp() * util.char_exponent(u * v)?;
                s += t;
                s2 += t.norm_sqr();
            }
            let mean = s / n;
            let var = (s2 / n - mean.norm_sqr()).max(0.0);
            budget = budget.max(bud * psi_eta.norm() + 3.0 * (var / n).sqrt());
            psi_eta * phi + mean
        } else {
            let (phi, d1, d2, bud) = ops.cf3(u)?;
            let phi_at = |w: f64| -> Complex64 {
                match law {
                    LawRep::ClosedForm(l) => (l.cf.as_ref().unwrap())(w),
                    _ => unreachable!(),
                }
            };
            let wre = |y: f64| {
                let full = phi_at(u + u * y) - phi;
                let comp = if y.abs() <= 1.0 { u * y * d1 } else { Complex64::new(0.0, 0.0) };
                (full - comp).re
            };
            let wim = |y: f64| {
                let full = phi_at(u + u * y) - phi;
                let comp = if y.abs() <= 1.0 { u * y * d1 } else { Complex64::new(0.0, 0.0) };
                (full - comp).im
            };
            let dom = Iv::above(-1.0, true);
            let int_re = util.nu.integrate(&wre, dom, tol)?;
            let int_im = util.nu.integrate(&wim, dom, tol)?;
            let rhs = -util.gamma * u * d1 - 0.5 * util.sigma2 * u * u * d2
                - Complex64::new(int_re.value, int_im.value);
            budget = budget.max(bud * (1.0 + psi_eta.norm()) + int_re.err + int_im.err);

            // cross-check against the expectation form when a density exists
            if let LawRep::ClosedForm(l) = law {
                if l.pdf.is_some() {
                    let g_re = |v: f64| {
                        (Complex64::new(0.0, u * v).exp()
                            * util.char_exponent(u * v).unwrap_or_default())
                        .re
                    };
                    let g_im = |v: f64| {
                        (Complex64::new(0.0, u * v).exp()
                            * util.char_exponent(u * v).unwrap_or_default())
                        .im
                    };
                    let (er, ee1) = ops.int_density(&g_re, f64::NEG_INFINITY, f64::INFINITY, &[])?;
                    let (ei, ee2) = ops.int_density(&g_im, f64::NEG_INFINITY, f64::INFINITY, &[])?;
                    let rhs_e = -Complex64::new(er, ei);
                    max_cross = max_cross.max((rhs - rhs_e).norm() - ee1 - ee2);
                }
            }
            psi_eta * phi - rhs
        };
        residual.push(r.norm());
    }
    if max_cross > 0.0 {
        notes.push(format!(
            "max discrepancy between integral and expectation forms beyond quad budget: {max_cross:.3e}"
        ));
    }
    Ok(ResidualReport::new(
        "cf",
        grid.to_vec(),
        residual,
        None,
        budget,
        opts.tol,
        notes,
    ))
}

/// Laplace-transform equation for subordinator `η` (no moment condition):
/// `(ln L_{η₁}(u)/u) L(u) = q (L(u)-1)/u + (γ_ξ - σ_ξ²/2) L'(u)
///    - (σ_ξ²/2) u L''(u)
///    - ∫ (L(u e^{-y})/u - L(u)/u + y L'(u) 1_{|y|<=1}) ν_ξ(dy)`.
pub fn residual_laplace(
    grid: &[f64],
    xi: &LevyTriplet,
    eta: &LevyTriplet,
    q: f64,
    law: &LawRep,
    opts: &CheckOpts,
) -> Result<ResidualReport> {
    if !eta.is_subordinator()? {
        return Err(KefError::domain(
            "residual_laplace requires η to be a subordinator",
        ));
    }
    let ops = LawOps::new(law);
    if ops.support().0 < -1e-12 {
        return Err(KefError::domain(
            "residual_laplace: law must be supported on [0, ∞)",
        ));
    }
    let tol = Tol::default();
    let eta_drift = eta.drift0()?;
    let mut residual = Vec::with_capacity(grid.len());
    let mut budget: f64 = 0.0;

    for &u in grid {
        if !(u > 0.0) {
            return Err(KefError::domain("residual_laplace grid must be positive"));
        }
        // (ln E e^{-u η₁})/u = -γ_η⁰ - ∫ (1 - e^{-uy})/u ν_η(dy), integrated
        // in the scaled form so small u carries no cancellation
        let jump_part = eta
            .nu
            .integrate(&|y| -(-u * y).exp_m1() / u, Iv::above(0.0, false), tol)?;
        let ln_l_eta_over_u = -eta_drift - jump_part.value;

        let (l0, l1, l2, bud) = ops.laplace3(u)?;
        let mut point_budget = bud * (1.0 + ln_l_eta_over_u.abs()) + jump_part.err;

        // ∫ (L(u e^{-y}) - L(u))/u + y L'(u) 1_{|y|<=1} ν_ξ(dy)
        let w = |y: f64| {
            let lv = ops.laplace_value(u * (-y).exp()).map(|r| r.0).unwrap_or(f64::NAN);
            let mut v = (lv - l0) / u;
            if y.abs() <= 1.0 {
                v += y * l1;
            }
            v
        };
        let xi_int = xi.nu.integrate(&w, Iv::all(), tol)?;
        // the scaled differences of L amplify roundoff by 1/u
        point_budget += xi_int.err + f64::EPSILON / u * (1.0 + q);

        let r = ln_l_eta_over_u * l0
            - q * (l0 - 1.0) / u
            - (xi.gamma - 0.5 * xi.sigma2) * l1
            + 0.5 * xi.sigma2 * u * l2
            + xi_int.value;
        residual.push(r);
        budget = budget.max(point_budget);
    }
    Ok(ResidualReport::new(
        "laplace",
        grid.to_vec(),
        residual,
        None,
        budget,
        opts.tol,
        Vec::new(),
    ))
}

/// Density equation obtained by Laplace inversion, for `η` a subordinator
/// and the jump part of `ξ` of finite variation, on `z > 0`:
/// `γ_η⁰ f(z) - (γ_ξ⁰ + σ_ξ²/2) z f(z) - (σ_ξ²/2) z² f'(z) - q ∫_z^∞ f
///  = ∫_z^∞ ν_ξ((ln(s/z), ∞)) f(s) ds
///    - ∫_0^z (ν_ξ((-∞, ln(s/z))) + ν_η((z-s, ∞))) f(s) ds`.
pub fn residual_density_laplace(
    grid: &[f64],
    xi: &LevyTriplet,
    eta: &LevyTriplet,
    q: f64,
    law: &LawRep,
    opts: &CheckOpts,
) -> Result<ResidualReport> {
    if !eta.is_subordinator()? {
        return Err(KefError::domain(
            "residual_density_laplace requires η to be a subordinator",
        ));
    }
    let xi_drift = xi.drift0().map_err(|_| {
        KefError::domain("residual_density_laplace requires the jump part of ξ to have finite variation")
    })?;
    let eta_drift = eta.drift0()?;
    let ops = LawOps::new(law);
    let mut residual = Vec::with_capacity(grid.len());
    let mut budget: f64 = 0.0;
    let mut notes = Vec::new();
    if xi.sigma2 != 0.0 {
        notes.push(
            "assumes z ↦ z²f(z) absolutely continuous (σ_ξ² ≠ 0); not verifiable numerically"
                .to_string(),
        );
    }

    // kinks of s ↦ ν_ξ((ln(s/z),∞)) at s = z e^{y_atom}
    let xi_breaks: Vec<f64> = xi.nu.breakpoints();
    let eta_breaks: Vec<f64> = eta.nu.breakpoints();

    for &z in grid {
        if !(z > 0.0) {
            return Err(KefError::domain(
                "residual_density_laplace grid must be positive",
            ));
        }
        let (f, ef) = ops.density(z)?;
        let (f1, ef1) = ops.density_deriv(z)?;
        let (tail, etail) = ops.tail_above(z)?;

        let up_w = |s: f64| xi.nu.mass_above((s / z).ln(), true);
        let mut up_breaks: Vec<f64> = xi_breaks.iter().map(|y| z * y.exp()).collect();
        up_breaks.push(z * 1.0f64.exp());
        let (up, e_up) = ops.int_density(&|s| up_w(s) * 1.0, z, f64::INFINITY, &up_breaks)?;

        let low_w = |s: f64| {
            xi.nu.mass_below((s / z).ln(), true) + eta.nu.mass_above(z - s, true)
        };
        let mut low_breaks: Vec<f64> = xi_breaks.iter().map(|y| z * y.exp()).collect();
        low_breaks.extend(eta_breaks.iter().map(|y| z - y));
        let (low, e_low) = ops.int_density(&|s| low_w(s) * 1.0, 0.0, z, &low_breaks)?;

        let lhs = eta_drift * f - (xi_drift + 0.5 * xi.sigma2) * z * f
            - 0.5 * xi.sigma2 * z * z * f1
            - q * tail;
        let rhs = up - low;
        residual.push(lhs - rhs);
        let scale = 1.0 + (xi_drift + 0.5 * xi.sigma2).abs() * z + 0.5 * xi.sigma2 * z * z;
        budget = budget.max(ef * scale + ef1 * 0.5 * xi.sigma2 * z * z + q * etail + e_up + e_low);
    }
    Ok(ResidualReport::new(
        "density-laplace",
        grid.to_vec(),
        residual,
        None,
        budget,
        opts.tol,
        notes,
    ))
}
