//! Pairing of the killed-process generator with a candidate law: for the
//! invariant law the pairing `∫ A f dμ` vanishes for every test function.

use super::{CheckOpts, LawOps, ResidualReport};
use crate::error::Result;
use crate::est::LawRep;
use crate::levy::{kill, xi_to_u, Iv, LevyTriplet};
use crate::quad::Tol;

/// Polynomial bump `f(x) = (1 - ((x-c)/r)²)⁴` on `|x-c| < r`, zero outside:
/// compactly supported, three continuous derivatives, all analytic.
#[derive(Clone, Copy, Debug)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
}

impl Bump {
    pub fn new(center: f64, radius: f64) -> Self {
        assert!(radius > 0.0);
        Bump { center, radius }
    }

    #[inline]
    fn w(&self, x: f64) -> f64 {
        (x - self.center) / self.radius
    }

    pub fn f(&self, x: f64) -> f64 {
        let w = self.w(x);
        if w.abs() >= 1.0 {
            return 0.0;
        }
        let p = 1.0 - w * w;
        p * p * p * p
    }

    pub fn d1(&self, x: f64) -> f64 {
        let w = self.w(x);
        if w.abs() >= 1.0 {
            return 0.0;
        }
        let p = 1.0 - w * w;
        -8.0 * w * p * p * p / self.radius
    }

    pub fn d2(&self, x: f64) -> f64 {
        let w = self.w(x);
        if w.abs() >= 1.0 {
            return 0.0;
        }
        let p = 1.0 - w * w;
        (-8.0 * p * p * p + 48.0 * w * w * p * p) / (self.radius * self.radius)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// Generator of the killed process applied to the bump at `x`, in the
/// characteristics of `(η, Ũ)`:
/// `A f(x) = γ_η f'(x) + σ_η²/2 f''(x)
///           + ∫ (f(x+y) - f(x) - y f'(x) 1_{|y|<=1}) ν_η(dy)
///           + x f'(x) γ_Ũ + x² f''(x) σ_Ũ²/2
///           + ∫ (f(x+xy) - f(x) - x y f'(x) 1_{|y|<=1}) ν_Ũ(dy)`.
pub fn generator_apply(
    bump: &Bump,
    eta: &LevyTriplet,
    util: &LevyTriplet,
    x: f64,
    tol: Tol,
) -> Result<(f64, f64)> {
    let f = bump.f(x);
    let f1 = bump.d1(x);
    let f2 = bump.d2(x);
    let mut v = eta.gamma * f1 + 0.5 * eta.sigma2 * f2 + x * f1 * util.gamma
        + 0.5 * x * x * f2 * util.sigma2;
    let mut err = 0.0;
    let (slo, shi) = bump.support();

    // η-jump integral; integrand is O(y²) near 0 and switches on/off where
    // x + y crosses the bump support
    let w_eta = |y: f64| {
        let comp = if y.abs() <= 1.0 { y * f1 } else { 0.0 };
        bump.f(x + y) - f - comp
    };
    let mut cuts = vec![f64::NEG_INFINITY, -1.0, 1.0, slo - x, shi - x, f64::INFINITY];
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    for pair in cuts.windows(2) {
        let q = eta
            .nu
            .integrate(&w_eta, Iv::new(pair[0], pair[1], false, true), tol)?;
        v += q.value;
        err += q.err;
    }

    // Ũ-jump integral; vanishes identically at x = 0
    if x != 0.0 {
        let w_util = |y: f64| {
            let comp = if y.abs() <= 1.0 { x * y * f1 } else { 0.0 };
            bump.f(x + x * y) - f - comp
        };
        let mut cuts = vec![-1.0, 1.0, slo / x - 1.0, shi / x - 1.0, f64::INFINITY];
        cuts.retain(|c| *c >= -1.0);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        for pair in cuts.windows(2) {
            // the killing atom sits exactly at -1: keep it in the first piece
            let iv = Iv::new(pair[0], pair[1], pair[0] == -1.0, true);
            let q = util.nu.integrate(&w_util, iv, tol)?;
            v += q.value;
            err += q.err;
        }
    }
    Ok((v, err))
}

/// `∫ A f dμ` with its error budget: zero (within budget) certifies that
/// `μ` is invariant for the killed process.
pub fn generator_pairing(
    bump: &Bump,
    xi: &LevyTriplet,
    eta: &LevyTriplet,
    q: f64,
    law: &LawRep,
    _opts: &CheckOpts,
) -> Result<(f64, f64)> {
    let util = kill(&xi_to_u(xi)?, q)?;
    let tol = Tol::default();
    let ops = LawOps::new(law);
    let apply = |x: f64| {
        generator_apply(bump, eta, &util, x, tol)
            .map(|(v, _)| v)
            .unwrap_or(f64::NAN)
    };
    // A f decays with the jump tails beyond the bump support; integrate the
    // law against it with splits at the support edges
    let (lo, hi) = bump.support();
    let (val, e1) = ops.int_density(&apply, f64::NEG_INFINITY, f64::INFINITY, &[lo, hi])?;
    let atom_term = ops.atom0() * apply(0.0);
    // inner-quadrature budget estimated at the bump center
    let (_, inner_err) = generator_apply(bump, eta, &util, bump.center, tol)?;
    Ok((val + atom_term, e1 + inner_err + 1e-10))
}

/// Default bump suite for the generator check: five bumps spread over the
/// central mass of the law.
pub fn default_bumps(law: &LawRep) -> Vec<Bump> {
    let ops = LawOps::new(law);
    let (lo, hi) = ops.support();
    let lo = lo.max(-6.0);
    let hi = hi.min(6.0).max(lo + 0.5);
    let width = hi - lo;
    (0..5)
        .map(|i| {
            let c = lo + width * (0.15 + 0.175 * i as f64);
            Bump::new(c, 0.35 * width)
        })
        .collect()
}

/// Run the pairing over the default bump suite and report each pairing as a
/// residual (grid = bump centers).
pub fn generator_suite(
    xi: &LevyTriplet,
    eta: &LevyTriplet,
    q: f64,
    law: &LawRep,
    opts: &CheckOpts,
) -> Result<ResidualReport> {
    let bumps = default_bumps(law);
    let mut grid = Vec::new();
    let mut residual = Vec::new();
    let mut budget: f64 = 0.0;
    for b in &bumps {
        let (v, e) = generator_pairing(b, xi, eta, q, law, opts)?;
        grid.push(b.center);
        residual.push(v);
        budget = budget.max(e);
    }
    Ok(ResidualReport::new(
        "generator",
        grid,
        residual,
        None,
        budget,
        opts.tol,
        Vec::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let b = Bump::new(0.7, 1.3);
        let h = 1e-6;
        for &x in &[-0.5, 0.2, 0.7, 1.6, 1.99] {
            let fd1 = (b.f(x + h) - b.f(x - h)) / (2.0 * h);
            let fd2 = (b.f(x + h) - 2.0 * b.f(x) + b.f(x - h)) / (h * h);
            assert!((fd1 - b.d1(x)).abs() < 1e-8, "x={x}");
            assert!((fd2 - b.d2(x)).abs() < 1e-3, "x={x}");
        }
        // compact support, C² at the boundary
        assert_eq!(b.f(2.01), 0.0);
        assert!(b.d1(1.9999999).abs() < 1e-18);
        assert!(b.d2(1.9999999).abs() < 1e-11);
    }

    #[test]
    fn zero_function_pairs_to_zero() {
        // a bump supported away from the law's support integrates to ~0
        let xi = LevyTriplet::deterministic(1.0);
        let eta = LevyTriplet::deterministic(1.0);
        let law = crate::laws::reference("trivial_kef", &serde_json::json!({"gamma": 1.0, "q": 1.0}))
            .unwrap()
            .law;
        let b = Bump::new(50.0, 0.5);
        let (v, e) = generator_pairing(&b, &xi, &eta, 1.0, &law, &CheckOpts::default()).unwrap();
        assert!(v.abs() <= e + 1e-12, "{v} vs {e}");
    }
}
