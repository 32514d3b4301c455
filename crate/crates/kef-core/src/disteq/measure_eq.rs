//! Measure-level distributional equation residuals: the general constant-
//! profile equation, its finite-first-moment and finite-variation
//! specializations, and the differentiated density form.

use super::aux_fns::{build_aux, AuxFunctions};
use super::{CheckOpts, LawOps, ResidualReport};
use crate::error::{KefError, Result};
use crate::est::LawRep;
use crate::levy::{kill, xi_to_u, LevyTriplet};
use crate::quad::{self, Tol};

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn build_util(xi: &LevyTriplet, q: f64) -> Result<LevyTriplet> {
    kill(&xi_to_u(xi)?, q)
}

/// Ratio-scaled integral `∫_0^∞ x·S(z/x) μ(dx)` (z>0) or
/// `∫_{-∞}^0 |x|·S(z/x) μ(dx)` (z<0), for `S = S_Ũ`-type functions; the
/// inner integrand kinks where `z/x` crosses a structural point of `S`.
fn ratio_scaled_int(
    ops: &LawOps,
    z: f64,
    kink_ws: &[f64],
    s_fn: &dyn Fn(f64) -> Result<f64>,
    weighted_by_x: bool,
) -> Result<(f64, f64)> {
    let breaks: Vec<f64> = kink_ws
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| z / w)
        .collect();
    let g = |x: f64| {
        let s = s_fn(z / x).unwrap_or(f64::NAN);
        if weighted_by_x {
            x.abs() * s
        } else {
            s
        }
    };
    if z > 0.0 {
        ops.int_density(&g, 0.0, f64::INFINITY, &breaks)
    } else {
        ops.int_density(&g, f64::NEG_INFINITY, 0.0, &breaks)
    }
}

/// Shared assembly of the constant-profile equation: given the equation's
/// `S`-pair, `B`-pair and drift pair, returns the profile `G(z)` and budget.
struct ProfileParts<'a> {
    aux: &'a AuxFunctions,
    ops: &'a LawOps<'a>,
    sigma_part: bool,
    drift_eta: f64,
    drift_util: f64,
}

impl<'a> ProfileParts<'a> {
    /// `(S_η ∗ μ)(z)` with the chosen S-variant; the atom at 0 contributes
    /// `S_η(z)·μ({0})`.
    fn s_eta_conv(&self, z: f64, fm: bool) -> Result<(f64, f64)> {
        let aux = self.aux;
        let w = |x: f64| {
            if fm {
                aux.s_eta_fm(z - x).unwrap_or(f64::NAN)
            } else {
                aux.s_eta(z - x).unwrap_or(f64::NAN)
            }
        };
        let breaks: Vec<f64> = aux.eta_conv_kinks().iter().map(|k| z - k).collect();
        let (v, e) = self
            .ops
            .int_density(&w, f64::NEG_INFINITY, f64::INFINITY, &breaks)?;
        let atom = self.ops.atom0()
            * if fm {
                aux.s_eta_fm(z)?
            } else {
                aux.s_eta(z)?
            };
        Ok((v + atom, e))
    }

    fn rho(&self, z: f64, fm: bool) -> Result<(f64, f64)> {
        let aux = self.aux;
        let s: Box<dyn Fn(f64) -> Result<f64>> = if fm {
            Box::new(move |w| aux.s_util_fm(w))
        } else {
            Box::new(move |w| aux.s_util(w))
        };
        ratio_scaled_int(self.ops, z, &aux.util_ratio_kinks(), &s, true)
    }

    /// `∫_{0+}^z (γ_η + x γ_Ũ) μ(dx)` with the equation's drift pair.
    fn drift_int(&self, z: f64) -> Result<(f64, f64)> {
        let (de, du) = (self.drift_eta, self.drift_util);
        self.ops.int_signed_0z(&|x| de + x * du, z)
    }

    /// σ-weighted density term `(σ_η²/2 + z²σ_Ũ²/2) f(z)`.
    fn sigma_term(&self, z: f64) -> Result<(f64, f64)> {
        let se = self.aux.eta.sigma2;
        let su = self.aux.util.sigma2;
        if !self.sigma_part || (se == 0.0 && su == 0.0) {
            return Ok((0.0, 0.0));
        }
        let (f, ef) = self.ops.density(z)?;
        let w = 0.5 * se + 0.5 * z * z * su;
        Ok((w * f, w * ef))
    }
}

/// General measure equation: there is a constant `K` with, for a.e. z,
/// `K = (σ_η²/2 + z²σ_Ũ²/2) f(z) + (S_η ∗ μ)(z) + ρ(z)
///      - ∫_{0+}^z (γ_η + x γ_Ũ) μ(dx) - ∫_{0+}^z (B_η ∗ μ)(x) dx
///      - ∫_{0+}^z ∫_{0+}^t B_Ũ(t/x) μ(dx) dt`.
/// The constant is estimated as the median of the profile over the grid;
/// the residual is the deviation from it.
pub fn residual_mu(
    grid: &[f64],
    xi: &LevyTriplet,
    eta: &LevyTriplet,
    q: f64,
    law: &LawRep,
    opts: &CheckOpts,
) -> Result<ResidualReport> {
    let util = build_util(xi, q)?;
    let aux = build_aux(eta, &util)?;
    let ops = LawOps::new(law);
    if (eta.sigma2 > 0.0 || util.sigma2 > 0.0) && density_unavailable(&ops) {
        return Err(KefError::domain(
            "residual_mu: σ² terms multiply μ(dz); a density (or KDE) is required",
        ));
    }
    let parts = ProfileParts {
        aux: &aux,
        ops: &ops,
        sigma_part: true,
        drift_eta: eta.gamma,
        drift_util: util.gamma,
    };
    let tol = Tol::default();
    let mut profile = Vec::with_capacity(grid.len());
    let mut budget: f64 = 0.0;

    for &z in grid {
        let (sig, e0) = parts.sigma_term(z)?;
        let (conv, e1) = parts.s_eta_conv(z, false)?;
        let (rho, e2) = parts.rho(z, false)?;
        let (dr, e3) = parts.drift_int(z)?;

        // ∫_{0+}^z (B_η ∗ μ)(x) dx
        let b_conv = |x: f64| {
            let w = |y: f64| aux.b_eta(x - y);
            ops.int_density(&w, f64::NEG_INFINITY, f64::INFINITY, &[x - 1.0, x, x + 1.0])
                .map(|(v, _)| v + ops.atom0() * aux.b_eta(x))
                .unwrap_or(f64::NAN)
        };
        let (b_int, e4) = signed_outer_quad(&b_conv, z, tol)?;

        // ∫_{0+}^z ∫_{0+}^t B_Ũ(t/x) μ(dx) dt
        let inner = |t: f64| {
            let w = |x: f64| aux.b_util(t / x).unwrap_or(f64::NAN);
            let breaks: Vec<f64> = aux.util_ratio_kinks().iter().map(|k| t / k).collect();
            let r = if t > 0.0 {
                ops.int_density(&w, 0.0, t, &breaks)
            } else {
                ops.int_density(&w, t, 0.0, &breaks).map(|(v, e)| (-v, e))
            };
            r.map(|(v, _)| v).unwrap_or(f64::NAN)
        };
        let (bu_int, e5) = signed_outer_quad(&inner, z, tol)?;

        profile.push(sig + conv + rho - dr - b_int - bu_int);
        budget = budget.max(e0 + e1 + e2 + e3 + e4 + e5);
    }
    let k_hat = median(&profile);
    let residual: Vec<f64> = profile.iter().map(|g| g - k_hat).collect();
    Ok(ResidualReport::new(
        "mu",
        grid.to_vec(),
        residual,
        Some(k_hat),
        budget,
        opts.tol,
        Vec::new(),
    ))
}

fn density_unavailable(ops: &LawOps) -> bool {
    if ops.is_empirical() {
        return false; // KDE stands in, with its budget
    }
    match ops.law {
        LawRep::ClosedForm(l) => l.pdf.is_none(),
        _ => false,
    }
}

/// `∫_{0+}^z h(t) dt` as a signed quadrature.
fn signed_outer_quad(h: &dyn Fn(f64) -> f64, z: f64, tol: Tol) -> Result<(f64, f64)> {
    if z == 0.0 {
        return Ok((0.0, 0.0));
    }
    let q = if z > 0.0 {
        quad::quad(h, 0.0, z, tol)?
    } else {
        let r = quad::quad(h, z, 0.0, tol)?;
        quad::Quad {
            value: -r.value,
            err: r.err,
        }
    };
    Ok((q.value, q.err))
}

/// Finite-first-moment form: with `γ_η¹ = E η₁`, `γ_Ũ¹ = E Ũ₁` and the
/// untruncated `S^FM` tails,
/// `K = σ-term + (S_η^FM ∗ μ)(z) + ρ^FM(z) - ∫_{0+}^z (γ_η¹ + x γ_Ũ¹) μ(dx)`.
/// When `γ_Ũ¹ < 0` the constant is known in closed form and both integral
/// expressions for it are cross-checked.
pub fn residual_mu_fm(
    grid: &[f64],
    xi: &LevyTriplet,
    eta: &LevyTriplet,
    q: f64,
    law: &LawRep,
    opts: &CheckOpts,
) -> Result<ResidualReport> {
    let util = build_util(xi, q)?;
    let gamma_eta1 = eta
        .mean()?
        .ok_or_else(|| KefError::domain("residual_mu_fm requires E|η₁| < ∞"))?;
    let gamma_util1 = util
        .mean()?
        .ok_or_else(|| KefError::domain("residual_mu_fm requires E|Ũ₁| < ∞"))?;
    let aux = build_aux(eta, &util)?;
    let ops = LawOps::new(law);
    let parts = ProfileParts {
        aux: &aux,
        ops: &ops,
        sigma_part: true,
        drift_eta: gamma_eta1,
        drift_util: gamma_util1,
    };
    let mut profile = Vec::with_capacity(grid.len());
    let mut budget: f64 = 0.0;
    for &z in grid {
        let (sig, e0) = parts.sigma_term(z)?;
        let (conv, e1) = parts.s_eta_conv(z, true)?;
        let (rho, e2) = parts.rho(z, true)?;
        let (dr, e3) = parts.drift_int(z)?;
        profile.push(sig + conv + rho - dr);
        budget = budget.max(e0 + e1 + e2 + e3);
    }
    let mut notes = Vec::new();
    let k = if gamma_util1 < 0.0 {
        let (k1, k2, ek) = fm_explicit_k(xi, eta, q, law)?;
        notes.push(format!(
            "closed-form K: -∫_(0,∞) = {k1:.10e}, ∫_(-∞,0] = {k2:.10e} (diff {:.2e})",
            (k1 - k2).abs()
        ));
        let k_est = median(&profile);
        notes.push(format!(
            "median-estimated K = {k_est:.10e}, agrees with closed form within {:.2e}",
            (k_est - k1).abs()
        ));
        budget += ek + (k1 - k2).abs();
        k1
    } else {
        median(&profile)
    };
    let residual: Vec<f64> = profile.iter().map(|g| g - k).collect();
    Ok(ResidualReport::new(
        "mu-fm",
        grid.to_vec(),
        residual,
        Some(k),
        budget,
        opts.tol,
        notes,
    ))
}

/// Closed-form constant of the finite-moment equation, valid when
/// `γ_Ũ¹ < 0`: returns both integral expressions
/// `-∫_{0+}^∞ (γ_η¹ + x γ_Ũ¹) μ(dx)` and `∫_{-∞}^0 (γ_η¹ + x γ_Ũ¹) μ(dx)`
/// plus their combined budget. Errors when `γ_Ũ¹ >= 0`.
pub fn fm_explicit_k(
    xi: &LevyTriplet,
    eta: &LevyTriplet,
    q: f64,
    law: &LawRep,
) -> Result<(f64, f64, f64)> {
    let util = build_util(xi, q)?;
    let gamma_eta1 = eta
        .mean()?
        .ok_or_else(|| KefError::domain("fm_explicit_k requires E|η₁| < ∞"))?;
    let gamma_util1 = util
        .mean()?
        .ok_or_else(|| KefError::domain("fm_explicit_k requires E|Ũ₁| < ∞"))?;
    if !(gamma_util1 < 0.0) {
        return Err(KefError::domain(format!(
            "fm_explicit_k: closed-form constant requires E[Ũ₁] < 0, got {gamma_util1}"
        )));
    }
    let ops = LawOps::new(law);
    let g = move |x: f64| gamma_eta1 + x * gamma_util1;
    let (pos, e1) = ops.int_density(&g, 0.0, f64::INFINITY, &[])?;
    let (neg, e2) = ops.int_density(&g, f64::NEG_INFINITY, 0.0, &[])?;
    let k1 = -pos;
    // the (-∞, 0] expression includes the atom at 0
    let k2 = neg + ops.atom0() * g(0.0);
    Ok((k1, k2, e1 + e2))
}

/// Finite-variation form: with drifts `γ_η⁰`, `γ_Ũ⁰` and untruncated tails,
/// `0 = (γ_η⁰ + z γ_Ũ⁰) f(z) + (B_η^FV ∗ μ)(z)
///      + 1_{z>0} ∫_0^∞ B_Ũ^FV(z/x) μ(dx) - 1_{z<0} ∫_{-∞}^0 B_Ũ^FV(z/x) μ(dx)`.
/// No constant to estimate: the right-hand side must vanish pointwise.
pub fn residual_mu_fv(
    grid: &[f64],
    xi: &LevyTriplet,
    eta: &LevyTriplet,
    q: f64,
    law: &LawRep,
    opts: &CheckOpts,
) -> Result<ResidualReport> {
    let util = build_util(xi, q)?;
    if eta.sigma2 != 0.0 || util.sigma2 != 0.0 {
        return Err(KefError::domain(
            "residual_mu_fv requires finite variation: σ_η² = σ_Ũ² = 0",
        ));
    }
    let drift_eta = eta.drift0()?;
    let drift_util = util.drift0()?;
    let aux = build_aux(eta, &util)?;
    let ops = LawOps::new(law);
    let mut residual = Vec::with_capacity(grid.len());
    let mut budget: f64 = 0.0;
    for &z in grid {
        if z == 0.0 {
            return Err(KefError::domain("residual_mu_fv: grid must avoid z = 0"));
        }
        let (f, ef) = ops.density(z)?;
        let drift_term = (drift_eta + z * drift_util) * f;

        let w = |x: f64| aux.b_eta_fv(z - x).unwrap_or(f64::NAN);
        let breaks: Vec<f64> = aux.eta_conv_kinks().iter().map(|k| z - k).collect();
        let (conv, e1) = ops.int_density(&w, f64::NEG_INFINITY, f64::INFINITY, &breaks)?;
        let conv = conv + ops.atom0() * aux.b_eta_fv(z)?;

        let s: Box<dyn Fn(f64) -> Result<f64>> = Box::new(|w| aux.b_util_fv(w));
        let (scaled, e2) = ratio_scaled_int(&ops, z, &aux.util_ratio_kinks(), &s, false)?;
        let scaled = if z > 0.0 { scaled } else { -scaled };

        residual.push(drift_term + conv + scaled);
        budget = budget
            .max(ef * (drift_eta + z * drift_util).abs() + e1 + e2);
    }
    Ok(ResidualReport::new(
        "mu-fv",
        grid.to_vec(),
        residual,
        None,
        budget,
        opts.tol,
        Vec::new(),
    ))
}

/// Differentiated density form (jump parts of finite variation,
/// `σ_η² + σ_Ũ² > 0`):
/// `(σ_η²/2 + z²σ_Ũ²/2) f'(z) + z σ_Ũ² f(z) - (γ_η⁰ + z γ_Ũ⁰) f(z)
///  - B_η^FV(z) μ({0})
///  = (B_η^FV ∗ f)(z) + 1_{z>0} ∫_0^∞ B_Ũ^FV(z/x) f(x) dx
///    - 1_{z<0} ∫_{-∞}^0 B_Ũ^FV(z/x) f(x) dx`.
pub fn residual_density_diff(
    grid: &[f64],
    xi: &LevyTriplet,
    eta: &LevyTriplet,
    q: f64,
    law: &LawRep,
    opts: &CheckOpts,
) -> Result<ResidualReport> {
    let util = build_util(xi, q)?;
    if !(eta.sigma2 + util.sigma2 > 0.0) {
        return Err(KefError::domain(
            "residual_density_diff requires σ_η² + σ_Ũ² > 0",
        ));
    }
    let drift_eta = eta.drift0()?;
    let drift_util = util.drift0()?;
    let aux = build_aux(eta, &util)?;
    let ops = LawOps::new(law);
    let mut residual = Vec::with_capacity(grid.len());
    let mut budget: f64 = 0.0;
    for &z in grid {
        if z == 0.0 {
            return Err(KefError::domain(
                "residual_density_diff: grid must avoid z = 0",
            ));
        }
        let (f, ef) = ops.density(z)?;
        let (f1, ef1) = ops.density_deriv(z)?;
        let w_sigma = 0.5 * eta.sigma2 + 0.5 * z * z * util.sigma2;
        let lhs = w_sigma * f1 + z * util.sigma2 * f
            - (drift_eta + z * drift_util) * f
            - aux.b_eta_fv(z)? * ops.atom0();

        let w = |x: f64| aux.b_eta_fv(z - x).unwrap_or(f64::NAN);
        let breaks: Vec<f64> = aux.eta_conv_kinks().iter().map(|k| z - k).collect();
        let (conv, e1) = ops.int_density(&w, f64::NEG_INFINITY, f64::INFINITY, &breaks)?;

        let s: Box<dyn Fn(f64) -> Result<f64>> = Box::new(|w| aux.b_util_fv(w));
        let (scaled, e2) = ratio_scaled_int(&ops, z, &aux.util_ratio_kinks(), &s, false)?;
        let scaled = if z > 0.0 { scaled } else { -scaled };

        residual.push(lhs - conv - scaled);
        budget = budget.max(
            ef * (z * util.sigma2 + (drift_eta + z * drift_util).abs())
                + ef1 * w_sigma
                + e1
                + e2,
        );
    }
    Ok(ResidualReport::new(
        "density-diff",
        grid.to_vec(),
        residual,
        None,
        budget,
        opts.tol,
        Vec::new(),
    ))
}

/// Density of the first-moment-form equation from the earlier literature at
/// `v > 0`, for the configuration `ξ_t = t`, `ν_η(dx) = e^{-|x|} dx`, q = 0
/// (where that equation fails): its value against a candidate law is
/// `-∫_v^∞ μ(dx) + (1/v)∫_0^v e^{-(v-x)} μ(dx) + (1/v)∫_v^∞ e^{-(x-v)} μ(dx)
///  - ∫_v^∞ w^{-2} (∫_0^w e^{-(w-x)} μ(dx) + ∫_w^∞ e^{-(x-w)} μ(dx)) dw`,
/// which for the Laplace(0,1) law equals `-(1/4)E₁(v)` rather than zero.
pub fn first_moment_form_discrepancy(v: f64, law: &LawRep) -> Result<f64> {
    if !(v > 0.0) {
        return Err(KefError::domain("first_moment_form_discrepancy requires v > 0"));
    }
    let ops = LawOps::new(law);
    let (tail, _) = ops.tail_above(v)?;
    let inner = |w: f64| -> f64 {
        let a = ops
            .int_density(&|x| (-(w - x)).exp(), 0.0, w, &[])
            .map(|(t, _)| t)
            .unwrap_or(f64::NAN);
        let b = ops
            .int_density(&|x| (-(x - w)).exp(), w, f64::INFINITY, &[])
            .map(|(t, _)| t)
            .unwrap_or(f64::NAN);
        a + b
    };
    let t2 = inner(v) / v; // the two middle terms combined at w = v
    let t4 = quad::quad_semi_inf(|w| inner(w) / (w * w), v, Tol::new(1e-9, 1e-8))?.value;
    Ok(-tail + t2 - t4)
}
