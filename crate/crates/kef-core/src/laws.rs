//! Registry of closed-form reference laws and characteristic functions for
//! killed exponential functionals, each packaged as a [`LawRep`] plus an
//! optional exact sampler. Every entry records the `(ξ, η, q)` configuration
//! it is the law of `V` for.

use crate::error::{KefError, Result};
use crate::est::{ClosedFormLaw, LaplaceFn, LawRep};
use crate::quad::{self, Tol};
use crate::rng::Rng;
use crate::special;
use num_complex::Complex64;
use serde_json::Value;
use std::sync::Arc;

pub type Sampler = Arc<dyn Fn(&mut Rng) -> f64 + Send + Sync>;

/// A named reference law with parameters and applicability description.
#[derive(Clone)]
pub struct ReferenceLaw {
    pub name: String,
    pub params: Value,
    /// The `(ξ, η, q)` triple this is the law of `V` for.
    pub applicability: String,
    pub law: LawRep,
    pub sampler: Option<Sampler>,
}

impl std::fmt::Debug for ReferenceLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReferenceLaw")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

pub fn registry_names() -> &'static [&'static str] {
    &[
        "yor",
        "mittag_leffler_law",
        "gamma_law",
        "laplace01",
        "potential_bm",
        "trivial_kef",
        "uniform_over_2exp",
        "two_bm_q0",
        "cf_bm_eta",
        "cf_bessel",
        "cf_hypergeom",
    ]
}

fn param(params: &Value, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| KefError::config(format!("missing or non-numeric parameter '{key}'")))
}

fn param_or(params: &Value, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| KefError::config(format!("non-numeric parameter '{key}'"))),
    }
}

/// Look up a reference law by name, with a JSON object of parameters.
pub fn reference(name: &str, params: &Value) -> Result<ReferenceLaw> {
    match name {
        "yor" => yor(params),
        "mittag_leffler_law" => mittag_leffler_law(params),
        "gamma_law" => gamma_law(params),
        "laplace01" => laplace01(params),
        "potential_bm" => potential_bm(params),
        "trivial_kef" => trivial_kef(params),
        "uniform_over_2exp" => uniform_over_2exp(params),
        "two_bm_q0" => two_bm_q0(params),
        "cf_bm_eta" => cf_bm_eta(params),
        "cf_bessel" => cf_bessel(params),
        "cf_hypergeom" => cf_hypergeom(params),
        other => Err(KefError::config(format!(
            "unknown reference law '{other}'; known: {:?}",
            registry_names()
        ))),
    }
}

/// Law of `V` for `ξ = 2B + b t`, `η_t = t`, killing rate `q > 0`:
/// `V =ᵈ Beta(1, β) / (2 Gamma(α, 1))` with independent factors and
/// `α, β = (√(2q + b²/4) ± b/2)/2`.
///
/// The shape pair is pinned by matching the first two moments of `V`
/// (`E V = 1/(q+b-2)` and `E V² = 2 E V/(q+2b-8)` where finite, from the
/// invariance of the law under the generator).
fn yor(params: &Value) -> Result<ReferenceLaw> {
    let q = param(params, "q")?;
    let b = param_or(params, "b", 0.0)?;
    if !(q > 0.0) {
        return Err(KefError::config("yor: q must be > 0"));
    }
    let ghat = (2.0 * q + 0.25 * b * b).sqrt();
    let alpha = 0.5 * (ghat + 0.5 * b);
    let beta = 0.5 * (ghat - 0.5 * b);
    let lg_alpha = special::ln_gamma(alpha);

    // f_V(v) = (1/(v Γ(α))) ∫_0^1 G^α e^{-G} ds,  G = (1 - s^{1/β})/(2v);
    // the substitution regularizes the Beta endpoint for β < 1.
    let pdf = {
        move |v: f64| -> f64 {
            if v <= 0.0 {
                return 0.0;
            }
            let integrand = move |s: f64| {
                let t = s.powf(1.0 / beta); // in (0,1)
                let g = (1.0 - t) / (2.0 * v);
                (alpha * g.ln() - g - lg_alpha).exp()
            };
            // for small v the mass sits near s = 1; split where the
            // exponent reaches ~40 so the spike is never missed
            let mut pts = vec![0.0];
            if 80.0 * v < 1.0 {
                pts.push((1.0 - 80.0 * v).powf(beta));
            }
            pts.push(1.0);
            quad::quad_pieces(integrand, &pts, Tol::new(1e-12, 1e-10))
                .map(|r| r.value / v)
                .unwrap_or(f64::NAN)
        }
    };

    // P(V > v) = (1/Γ(α)) ∫_0^{1/(2v)} (1 - 2gv)^β g^{α-1} e^{-g} dg; the
    // piece g < 1 is regularized by g = r^{1/α}, the rest is integrated in
    // g-space with geometric splits (the integrand is negligible past 720).
    let cdf = {
        let lg_alpha = special::ln_gamma(alpha);
        move |v: f64| -> f64 {
            if v <= 0.0 {
                return 0.0;
            }
            let gmax = (1.0 / (2.0 * v)).min(720.0);
            let mut tail = 0.0;
            let head_end = gmax.min(1.0);
            let head = quad::quad(
                |r: f64| {
                    let g = r.powf(1.0 / alpha);
                    (1.0 - 2.0 * g * v).max(0.0).powf(beta) * (-g).exp()
                },
                0.0,
                head_end.powf(alpha),
                Tol::new(1e-12, 1e-10),
            )
            .map(|q| q.value / alpha)
            .unwrap_or(f64::NAN);
            tail += head;
            if gmax > 1.0 {
                let mut pts = vec![1.0];
                let mut p = 4.0;
                while p < gmax {
                    pts.push(p);
                    p *= 4.0;
                }
                pts.push(gmax);
                let body = quad::quad_pieces(
                    |g: f64| {
                        (1.0 - 2.0 * g * v).max(0.0).powf(beta)
                            * ((alpha - 1.0) * g.ln() - g).exp()
                    },
                    &pts,
                    Tol::new(1e-12, 1e-10),
                )
                .map(|q| q.value)
                .unwrap_or(f64::NAN);
                tail += body;
            }
            1.0 - tail * (-lg_alpha).exp()
        }
    };

    let sampler: Sampler = Arc::new(move |rng: &mut Rng| rng.beta_one(beta) / (2.0 * rng.gamma(alpha)));

    Ok(ReferenceLaw {
        name: "yor".into(),
        params: params.clone(),
        applicability: format!("xi = 2B + {b} t, eta_t = t, q = {q}"),
        law: LawRep::ClosedForm(ClosedFormLaw {
            pdf: Some(Arc::new(pdf)),
            cdf: Some(Arc::new(cdf)),
            support: (0.0, f64::INFINITY),
            ..ClosedFormLaw::default()
        }),
        sampler: Some(sampler),
    })
}

/// Mittag-Leffler law with parameter α: the law of `V` for the
/// drift-free subordinator `ξ` with the associated jump measure,
/// `η_t = t` and `q = 1/Γ(1-α)`. Laplace transform `E_α(-u)`.
fn mittag_leffler_law(params: &Value) -> Result<ReferenceLaw> {
    let alpha = param(params, "alpha")?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(KefError::config("mittag_leffler_law: alpha must be in (0,1)"));
    }
    let is_half = (alpha - 0.5).abs() < 1e-14;
    let s_max = if is_half {
        40.0
    } else {
        special::ml_density_s_max(alpha)
    };
    let pdf = move |s: f64| special::ml_density(alpha, s).unwrap_or(f64::NAN);
    let cdf = move |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if is_half {
            special::erf(s / 2.0)
        } else {
            quad::quad(
                |x| special::ml_density(alpha, x).unwrap_or(f64::NAN),
                0.0,
                s.min(special::ml_density_s_max(alpha)),
                Tol::new(1e-10, 1e-8),
            )
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
        }
    };
    let laplace: LaplaceFn = if is_half {
        Arc::new(|u: f64| {
            let l = (u * u).exp() * special::erfc(u);
            let c = 2.0 / std::f64::consts::PI.sqrt();
            let l1 = 2.0 * u * l - c;
            let l2 = 2.0 * l + 2.0 * u * l1;
            (l, l1, l2)
        })
    } else {
        Arc::new(move |u: f64| {
            let mut l = 0.0;
            let mut l1 = 0.0;
            let mut l2 = 0.0;
            let mut pow = 1.0; // (-u)^k
            for k in 0..400u32 {
                let kf = k as f64;
                let rg = special::recip_gamma(1.0 + alpha * kf);
                l += pow * rg;
                if k >= 1 {
                    l1 += -kf * (-u).powi(k as i32 - 1) * rg;
                }
                if k >= 2 {
                    l2 += kf * (kf - 1.0) * (-u).powi(k as i32 - 2) * rg;
                }
                pow *= -u;
                if pow.abs() * rg < 1e-18 && k > 8 {
                    break;
                }
            }
            (l, l1, l2)
        })
    };
    let cf = move |u: f64| -> Complex64 {
        // φ(u) = ∫ e^{ius} f(s) ds by quadrature
        let re = quad::quad(
            |s| (u * s).cos() * special::ml_density(alpha, s).unwrap_or(0.0),
            0.0,
            s_max,
            Tol::new(1e-10, 1e-8),
        )
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
        let im = quad::quad(
            |s| (u * s).sin() * special::ml_density(alpha, s).unwrap_or(0.0),
            0.0,
            s_max,
            Tol::new(1e-10, 1e-8),
        )
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
        Complex64::new(re, im)
    };
    Ok(ReferenceLaw {
        name: "mittag_leffler_law".into(),
        params: params.clone(),
        applicability: format!(
            "xi = drift-free subordinator with the alpha = {alpha} jump measure, eta_t = t, q = 1/Gamma(1-alpha)"
        ),
        law: LawRep::ClosedForm(ClosedFormLaw {
            pdf: Some(Arc::new(pdf)),
            cdf: Some(Arc::new(cdf)),
            cf: Some(Arc::new(cf)),
            laplace: Some(laplace),
            support: (0.0, s_max),
            ..ClosedFormLaw::default()
        }),
        sampler: None,
    })
}

/// Gamma(λ/γ_ξ, a): the law of `V` for `ξ_t = γ_ξ t`, compound-Poisson `η`
/// with intensity λ and Exp(a) jumps, and `q = 0`.
fn gamma_law(params: &Value) -> Result<ReferenceLaw> {
    let lambda = param(params, "lambda")?;
    let gamma_xi = param(params, "gamma_xi")?;
    let a = param(params, "a")?;
    if !(lambda > 0.0 && gamma_xi > 0.0 && a > 0.0) {
        return Err(KefError::config("gamma_law: need lambda, gamma_xi, a > 0"));
    }
    let k = lambda / gamma_xi;
    let lg = special::ln_gamma(k);
    let pdf = move |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            (k * a.ln() + (k - 1.0) * x.ln() - a * x - lg).exp()
        }
    };
    let pdf_deriv = move |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            ((k - 1.0) / x - a) * (k * a.ln() + (k - 1.0) * x.ln() - a * x - lg).exp()
        }
    };
    let cdf = move |x: f64| if x <= 0.0 { 0.0 } else { special::gamma_p(k, a * x) };
    let cf = move |u: f64| (Complex64::new(1.0, 0.0) - Complex64::new(0.0, u / a))
        .powc(Complex64::new(-k, 0.0));
    let cf_d1 = move |u: f64| {
        let base = Complex64::new(1.0, -u / a);
        Complex64::new(0.0, k / a) * base.powc(Complex64::new(-k - 1.0, 0.0))
    };
    let cf_d2 = move |u: f64| {
        let base = Complex64::new(1.0, -u / a);
        -Complex64::new(k * (k + 1.0) / (a * a), 0.0) * base.powc(Complex64::new(-k - 2.0, 0.0))
    };
    let laplace: LaplaceFn = Arc::new(move |u: f64| {
        let l = (a / (a + u)).powf(k);
        let l1 = -k / (a + u) * l;
        let l2 = k * (k + 1.0) / ((a + u) * (a + u)) * l;
        (l, l1, l2)
    });
    let sampler: Sampler = Arc::new(move |rng: &mut Rng| rng.gamma(k) / a);
    Ok(ReferenceLaw {
        name: "gamma_law".into(),
        params: params.clone(),
        applicability: format!(
            "xi_t = {gamma_xi} t, eta = CP(intensity {lambda}, Exp({a}) jumps), q = 0"
        ),
        law: LawRep::ClosedForm(ClosedFormLaw {
            pdf: Some(Arc::new(pdf)),
            pdf_deriv: Some(Arc::new(pdf_deriv)),
            cdf: Some(Arc::new(cdf)),
            cf: Some(Arc::new(cf)),
            cf_d1: Some(Arc::new(cf_d1)),
            cf_d2: Some(Arc::new(cf_d2)),
            laplace: Some(laplace),
            support: (0.0, f64::INFINITY),
            ..ClosedFormLaw::default()
        }),
        sampler: Some(sampler),
    })
}

/// Laplace(0, 1): the law of `V` for `ξ_t = t`, pure-jump `η` with
/// `ν_η(dx) = e^{-|x|} dx`, `q = 0`. `φ(u) = 1/(1+u²)`.
fn laplace01(params: &Value) -> Result<ReferenceLaw> {
    let pdf = |x: f64| 0.5 * (-x.abs()).exp();
    let pdf_deriv = |x: f64| -0.5 * x.signum() * (-x.abs()).exp();
    let cdf = |x: f64| {
        if x < 0.0 {
            0.5 * x.exp()
        } else {
            1.0 - 0.5 * (-x).exp()
        }
    };
    let cf = |u: f64| Complex64::new(1.0 / (1.0 + u * u), 0.0);
    let cf_d1 = |u: f64| {
        let d = 1.0 + u * u;
        Complex64::new(-2.0 * u / (d * d), 0.0)
    };
    let cf_d2 = |u: f64| {
        let d = 1.0 + u * u;
        Complex64::new((6.0 * u * u - 2.0) / (d * d * d), 0.0)
    };
    let sampler: Sampler =
        Arc::new(|rng: &mut Rng| rng.exponential(1.0) - rng.exponential(1.0));
    Ok(ReferenceLaw {
        name: "laplace01".into(),
        params: params.clone(),
        applicability: "xi_t = t, eta pure-jump with nu(dx) = e^{-|x|} dx, q = 0".into(),
        law: LawRep::ClosedForm(ClosedFormLaw {
            pdf: Some(Arc::new(pdf)),
            pdf_deriv: Some(Arc::new(pdf_deriv)),
            cdf: Some(Arc::new(cdf)),
            cf: Some(Arc::new(cf)),
            cf_d1: Some(Arc::new(cf_d1)),
            cf_d2: Some(Arc::new(cf_d2)),
            support: (f64::NEG_INFINITY, f64::INFINITY),
            ..ClosedFormLaw::default()
        }),
        sampler: Some(sampler),
    })
}

/// `q` times the potential density of Brownian motion: the law of
/// `V = B_τ` for `ξ ≡ 0`, `η` standard BM, killing rate `q`:
/// density `√(q/2) e^{-√(2q) |z|}`.
fn potential_bm(params: &Value) -> Result<ReferenceLaw> {
    let q = param(params, "q")?;
    if !(q > 0.0) {
        return Err(KefError::config("potential_bm: q must be > 0"));
    }
    let b = (2.0 * q).sqrt();
    let pdf = move |z: f64| 0.5 * b * (-b * z.abs()).exp();
    let pdf_deriv = move |z: f64| -0.5 * b * b * z.signum() * (-b * z.abs()).exp();
    let cdf = move |z: f64| {
        if z < 0.0 {
            0.5 * (b * z).exp()
        } else {
            1.0 - 0.5 * (-b * z).exp()
        }
    };
    let cf = move |u: f64| Complex64::new(b * b / (b * b + u * u), 0.0);
    let cf_d1 = move |u: f64| {
        let d = b * b + u * u;
        Complex64::new(-2.0 * b * b * u / (d * d), 0.0)
    };
    let cf_d2 = move |u: f64| {
        let d = b * b + u * u;
        Complex64::new(b * b * (6.0 * u * u - 2.0 * b * b) / (d * d * d), 0.0)
    };
    let sampler: Sampler = Arc::new(move |rng: &mut Rng| {
        (rng.exponential(b) - rng.exponential(b)) as f64
    });
    Ok(ReferenceLaw {
        name: "potential_bm".into(),
        params: params.clone(),
        applicability: format!("xi = 0, eta standard BM, q = {q}"),
        law: LawRep::ClosedForm(ClosedFormLaw {
            pdf: Some(Arc::new(pdf)),
            pdf_deriv: Some(Arc::new(pdf_deriv)),
            cdf: Some(Arc::new(cdf)),
            cf: Some(Arc::new(cf)),
            cf_d1: Some(Arc::new(cf_d1)),
            cf_d2: Some(Arc::new(cf_d2)),
            support: (f64::NEG_INFINITY, f64::INFINITY),
            ..ClosedFormLaw::default()
        }),
        sampler: Some(sampler),
    })
}

/// Law of `(1/γ)(1 - e^{-γτ})` for `ξ_t = γ t`, `η_t = t`, `τ ~ Exp(q)`:
/// CDF `1 - (1-γv)^{q/γ}` on `(0, 1/γ)`; for `q = γ` the characteristic
/// function is `(qi/u)(1 - e^{iu/q})`.
fn trivial_kef(params: &Value) -> Result<ReferenceLaw> {
    let gamma = param(params, "gamma")?;
    let q = param(params, "q")?;
    if !(gamma > 0.0 && q > 0.0) {
        return Err(KefError::config("trivial_kef: gamma and q must be > 0"));
    }
    let r = q / gamma;
    let pdf = move |v: f64| {
        if v <= 0.0 || v >= 1.0 / gamma {
            0.0
        } else {
            q * (1.0 - gamma * v).powf(r - 1.0)
        }
    };
    let pdf_deriv = move |v: f64| {
        if v <= 0.0 || v >= 1.0 / gamma {
            0.0
        } else {
            -q * gamma * (r - 1.0) * (1.0 - gamma * v).powf(r - 2.0)
        }
    };
    let cdf = move |v: f64| {
        if v <= 0.0 {
            0.0
        } else if v >= 1.0 / gamma {
            1.0
        } else {
            1.0 - (1.0 - gamma * v).powf(r)
        }
    };
    let mut law = ClosedFormLaw {
        pdf: Some(Arc::new(pdf)),
        pdf_deriv: Some(Arc::new(pdf_deriv)),
        cdf: Some(Arc::new(cdf)),
        support: (0.0, 1.0 / gamma),
        ..ClosedFormLaw::default()
    };
    if (q - gamma).abs() < 1e-12 {
        let c = 1.0 / q;
        let cf = move |u: f64| -> Complex64 {
            if u == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            Complex64::new(0.0, q / u) * (1.0 - Complex64::new(0.0, c * u).exp())
        };
        let cf_d1 = move |u: f64| -> Complex64 {
            let e = Complex64::new(0.0, c * u).exp();
            let phi = Complex64::new(0.0, q / u) * (1.0 - e);
            -phi / u + e / u
        };
        let cf_d2 = move |u: f64| -> Complex64 {
            let e = Complex64::new(0.0, c * u).exp();
            let phi = Complex64::new(0.0, q / u) * (1.0 - e);
            let phi1 = -phi / u + e / u;
            -phi1 / u + phi / (u * u) - e / (u * u) + Complex64::new(0.0, c) * e / u
        };
        law.cf = Some(Arc::new(cf));
        law.cf_d1 = Some(Arc::new(cf_d1));
        law.cf_d2 = Some(Arc::new(cf_d2));
    }
    let sampler: Sampler = Arc::new(move |rng: &mut Rng| {
        (1.0 - (-gamma * rng.exponential(q)).exp()) / gamma
    });
    Ok(ReferenceLaw {
        name: "trivial_kef".into(),
        params: params.clone(),
        applicability: format!("xi_t = {gamma} t, eta_t = t, q = {q}"),
        law: LawRep::ClosedForm(law),
        sampler: Some(sampler),
    })
}

/// Law of `Z₁/(2 Z₂)` with `Z₁ ~ U(0,1)`, `Z₂ ~ Exp(1)` independent:
/// the law of `V` for `ξ = 2B`, `η_t = t`, `q = 2`, with density
/// `2 - (1/z + 2) e^{-1/(2z)}` on `z > 0`.
fn uniform_over_2exp(params: &Value) -> Result<ReferenceLaw> {
    let pdf = |z: f64| {
        if z <= 0.0 {
            0.0
        } else {
            2.0 - (1.0 / z + 2.0) * (-1.0 / (2.0 * z)).exp()
        }
    };
    let pdf_deriv = |z: f64| {
        if z <= 0.0 {
            0.0
        } else {
            -(-1.0 / (2.0 * z)).exp() / (2.0 * z * z * z)
        }
    };
    let cdf = |z: f64| {
        if z <= 0.0 {
            0.0
        } else {
            // 2z(1 - e^{-1/(2z)}), stable for large z
            2.0 * z * (-(-1.0 / (2.0 * z)).exp_m1())
        }
    };
    let sampler: Sampler = Arc::new(|rng: &mut Rng| rng.uniform() / (2.0 * rng.exponential(1.0)));
    Ok(ReferenceLaw {
        name: "uniform_over_2exp".into(),
        params: params.clone(),
        applicability: "xi = 2B, eta_t = t, q = 2".into(),
        law: LawRep::ClosedForm(ClosedFormLaw {
            pdf: Some(Arc::new(pdf)),
            pdf_deriv: Some(Arc::new(pdf_deriv)),
            cdf: Some(Arc::new(cdf)),
            support: (0.0, f64::INFINITY),
            ..ClosedFormLaw::default()
        }),
        sampler: Some(sampler),
    })
}

/// Two-Brownian case without killing: `ξ = σ_Ũ W + γ_ξ⁰ t`,
/// `η = σ_η B + γ_η⁰ t`, `q = 0`, parameterized by the drift
/// `γ_Ũ⁰ = -γ_ξ⁰ + σ_Ũ²/2` of the partner process:
/// `f(z) = C (σ_η² + z²σ_Ũ²)^{-1+γ_Ũ⁰/σ_Ũ²} exp((2γ_η⁰/(σ_η σ_Ũ)) arctan(σ_Ũ z/σ_η))`.
fn two_bm_q0(params: &Value) -> Result<ReferenceLaw> {
    let sigma_eta = param(params, "sigma_eta")?;
    let sigma_util = param(params, "sigma_util")?;
    let drift_eta = param_or(params, "drift_eta", 0.0)?;
    let drift_util = param_or(params, "drift_util", 0.0)?;
    if !(sigma_eta > 0.0 && sigma_util > 0.0) {
        return Err(KefError::config("two_bm_q0: need sigma_eta, sigma_util > 0"));
    }
    let s2e = sigma_eta * sigma_eta;
    let s2u = sigma_util * sigma_util;
    if !(drift_util < 0.5 * s2u) {
        return Err(KefError::config(
            "two_bm_q0: normalizability requires drift_util < sigma_util^2/2 (i.e. E xi_1 > 0)",
        ));
    }
    let expo = -1.0 + drift_util / s2u;
    let rot = 2.0 * drift_eta / (sigma_eta * sigma_util);
    let unnorm = move |z: f64| {
        (s2e + z * z * s2u).powf(expo) * (rot * (sigma_util * z / sigma_eta).atan()).exp()
    };
    let mass = quad::quad_neg_inf_rat(unnorm, 0.0, Tol::default())?
        .add(quad::quad_semi_inf_rat(unnorm, 0.0, Tol::default())?)
        .value;
    let c = 1.0 / mass;
    let pdf = move |z: f64| c * unnorm(z);
    let pdf_deriv = move |z: f64| {
        let f = c * unnorm(z);
        let logd = (drift_eta + (drift_util - s2u) * z) / (0.5 * s2e + 0.5 * s2u * z * z);
        f * logd
    };
    let cdf = move |z: f64| {
        quad::quad_neg_inf_rat(pdf, z, Tol::new(1e-10, 1e-8))
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
    };
    Ok(ReferenceLaw {
        name: "two_bm_q0".into(),
        params: params.clone(),
        applicability: format!(
            "xi = {sigma_util} W + ({}) t, eta = {sigma_eta} B + {drift_eta} t, q = 0",
            0.5 * s2u - drift_util
        ),
        law: LawRep::ClosedForm(ClosedFormLaw {
            pdf: Some(Arc::new(pdf)),
            pdf_deriv: Some(Arc::new(pdf_deriv)),
            cdf: Some(Arc::new(cdf)),
            support: (f64::NEG_INFINITY, f64::INFINITY),
            ..ClosedFormLaw::default()
        }),
        sampler: None,
    })
}

/// Characteristic function of `V` for `ξ_t = γ_ξ t`, `η = σ_η B`, at the
/// solvable killing rates `q = 2γ_ξ` and `q = 4γ_ξ`:
///
/// * `q = 2γ_ξ`: `φ(u) = (2q/(σ_η² u²)) (1 - e^{-σ_η² u²/(2q)})`
/// * `q = 4γ_ξ`: `φ(u) = (2q²/(σ_η⁴ u⁴)) (σ_η²u²/q - 1 + e^{-σ_η² u²/q})`
///
/// `sigma_eta` is the standard deviation of η's Gaussian part, i.e.
/// `ψ_η(u) = -σ_η² u²/2`.
fn cf_bm_eta(params: &Value) -> Result<ReferenceLaw> {
    let gamma_xi = param(params, "gamma_xi")?;
    let sigma_eta = param(params, "sigma_eta")?;
    let q = param(params, "q")?;
    if !(gamma_xi > 0.0 && sigma_eta > 0.0) {
        return Err(KefError::config("cf_bm_eta: need gamma_xi, sigma_eta > 0"));
    }
    let s2 = sigma_eta * sigma_eta;
    let ratio = q / gamma_xi;
    let law = if (ratio - 2.0).abs() < 1e-10 {
        let a = s2 / (2.0 * q);
        let phi = move |u: f64| -> f64 {
            let x = a * u * u;
            if x < 0.05 {
                // (1 - e^{-x})/x without cancellation
                return 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0 + x * x * x * x / 120.0;
            }
            -(-x).exp_m1() / x
        };
        let cf = move |u: f64| Complex64::new(phi(u), 0.0);
        let d1 = move |u: f64| {
            Complex64::new(-2.0 * phi(u) / u + 2.0 * (-a * u * u).exp() / u, 0.0)
        };
        let d2 = move |u: f64| {
            let e = (-a * u * u).exp();
            let p = phi(u);
            let p1 = -2.0 * p / u + 2.0 * e / u;
            Complex64::new(-2.0 * p1 / u + 2.0 * p / (u * u) - 2.0 * e / (u * u) - 4.0 * a * e, 0.0)
        };
        ClosedFormLaw {
            cf: Some(Arc::new(cf)),
            cf_d1: Some(Arc::new(d1)),
            cf_d2: Some(Arc::new(d2)),
            support: (0.0, f64::INFINITY),
            ..ClosedFormLaw::default()
        }
    } else if (ratio - 4.0).abs() < 1e-10 {
        let b = s2 / q;
        let phi = move |u: f64| -> f64 {
            let x = b * u * u;
            // (2/x²)(x - 1 + e^{-x}), stable via the series for small x
            if x < 0.05 {
                1.0 - x / 3.0 + x * x / 12.0 - x * x * x / 60.0 + x * x * x * x / 360.0
            } else {
                2.0 * (x - 1.0 + (-x).exp()) / (x * x)
            }
        };
        let cf = move |u: f64| Complex64::new(phi(u), 0.0);
        let d1 = move |u: f64| {
            let e = (-b * u * u).exp();
            Complex64::new(-4.0 * phi(u) / u + 4.0 / (b * u * u * u) * (1.0 - e), 0.0)
        };
        let d2 = move |u: f64| {
            let e = (-b * u * u).exp();
            let p = phi(u);
            let p1 = -4.0 * p / u + 4.0 / (b * u * u * u) * (1.0 - e);
            Complex64::new(
                -4.0 * p1 / u + 4.0 * p / (u * u) - 12.0 / (b * u * u * u * u) * (1.0 - e)
                    + 8.0 * e / (u * u),
                0.0,
            )
        };
        ClosedFormLaw {
            cf: Some(Arc::new(cf)),
            cf_d1: Some(Arc::new(d1)),
            cf_d2: Some(Arc::new(d2)),
            support: (0.0, f64::INFINITY),
            ..ClosedFormLaw::default()
        }
    } else {
        return Err(KefError::config(
            "cf_bm_eta: q must be 2*gamma_xi or 4*gamma_xi",
        ));
    };
    Ok(ReferenceLaw {
        name: "cf_bm_eta".into(),
        params: params.clone(),
        applicability: format!("xi_t = {gamma_xi} t, eta = {sigma_eta} B, q = {q}"),
        law: LawRep::ClosedForm(law),
        sampler: None,
    })
}

/// Characteristic function of `V` for `ξ = σ_ξ W + γ_ξ t` with
/// `γ_ξ = σ_ξ²/2 = q/6` and `η = σ_η B`:
/// `φ(u) = 6σ_ξ²/(σ_η²u²) - 2 e^{-σ_η|u|/σ_ξ} (1 + 3σ_ξ/(σ_η|u|) + 3σ_ξ²/(σ_η²u²))`.
fn cf_bessel(params: &Value) -> Result<ReferenceLaw> {
    let sigma_xi = param(params, "sigma_xi")?;
    let sigma_eta = param(params, "sigma_eta")?;
    if !(sigma_xi > 0.0 && sigma_eta > 0.0) {
        return Err(KefError::config("cf_bessel: need sigma_xi, sigma_eta > 0"));
    }
    let k = sigma_eta / sigma_xi;
    let cf = move |u: f64| Complex64::new(bessel_cf_profile(k * u.abs()), 0.0);
    let d1 = move |u: f64| Complex64::new(u.signum() * k * bessel_cf_profile_d1(k * u.abs()), 0.0);
    let d2 = move |u: f64| Complex64::new(k * k * bessel_cf_profile_d2(k * u.abs()), 0.0);
    Ok(ReferenceLaw {
        name: "cf_bessel".into(),
        params: params.clone(),
        applicability: format!(
            "xi = {sigma_xi} W + {} t, eta = {sigma_eta} B, q = {}",
            0.5 * sigma_xi * sigma_xi,
            3.0 * sigma_xi * sigma_xi
        ),
        law: LawRep::ClosedForm(ClosedFormLaw {
            cf: Some(Arc::new(cf)),
            cf_d1: Some(Arc::new(d1)),
            cf_d2: Some(Arc::new(d2)),
            support: (0.0, f64::INFINITY),
            ..ClosedFormLaw::default()
        }),
        sampler: None,
    })
}

/// `g(w) = 6/w² - 2 e^{-w}(1 + 3/w + 3/w²)`, evaluated through the
/// cancellation-free series `e^{-w} (1 + 6 Σ_{k>=3} w^{k-2}/k!)` for small w.
pub fn bessel_cf_profile(w: f64) -> f64 {
    if w <= 0.0 {
        return 1.0;
    }
    if w <= 1.0 {
        let mut sum = 0.0;
        let mut term = w / 6.0; // w^{k-2}/k! at k = 3
        for kk in 3..30 {
            sum += term;
            term *= w / (kk as f64 + 1.0);
            if term < 1e-18 {
                break;
            }
        }
        (-w).exp() * (1.0 + 6.0 * sum)
    } else {
        6.0 / (w * w) - 2.0 * (-w).exp() * (1.0 + 3.0 / w + 3.0 / (w * w))
    }
}

/// `g'(w) = -12 e^{-w} w Σ_{k>=4} w^{k-4}/k!` (small w) /
/// `-12/w³ + 2 e^{-w}(1 + 3/w + 6/w² + 6/w³)`.
pub fn bessel_cf_profile_d1(w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if w <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0 / 24.0; // w^{k-4}/k! at k = 4
        for kk in 4..30 {
            sum += term;
            term *= w / (kk as f64 + 1.0);
            if term < 1e-18 {
                break;
            }
        }
        -12.0 * (-w).exp() * w * sum
    } else {
        -12.0 / (w * w * w)
            + 2.0 * (-w).exp() * (1.0 + 3.0 / w + 6.0 / (w * w) + 6.0 / (w * w * w))
    }
}

/// `g''(w) = 36 e^{-w} (Σ_{k>=5} w^{k-4}/k! - 1/72)` (small w) /
/// `36/w⁴ - 2 e^{-w}(1 + 3/w + 9/w² + 18/w³ + 18/w⁴)`.
pub fn bessel_cf_profile_d2(w: f64) -> f64 {
    if w <= 0.0 {
        return -0.5;
    }
    if w <= 1.0 {
        let mut sum = 0.0;
        let mut term = w / 120.0; // w^{k-4}/k! at k = 5
        for kk in 5..32 {
            sum += term;
            term *= w / (kk as f64 + 1.0);
            if term < 1e-18 {
                break;
            }
        }
        36.0 * (-w).exp() * (sum - 1.0 / 72.0)
    } else {
        let w2 = w * w;
        36.0 / (w2 * w2)
            - 2.0 * (-w).exp() * (1.0 + 3.0 / w + 9.0 / w2 + 18.0 / (w * w2) + 18.0 / (w2 * w2))
    }
}

/// Characteristic function of `V` for `ξ_t = γ_ξ t`, compound-Poisson `η`
/// (intensity λ, Exp(a) jumps), killing rate `q`:
/// `((a-iu)/a)^{-λ/γ_ξ} ₂F₁(q/γ_ξ, -λ/γ_ξ; 1+q/γ_ξ; iu/a)` with the
/// principal complex power. Setting `q = 0` recovers the Gamma CF.
fn cf_hypergeom(params: &Value) -> Result<ReferenceLaw> {
    let lambda = param(params, "lambda")?;
    let gamma_xi = param(params, "gamma_xi")?;
    let a = param(params, "a")?;
    let q = param(params, "q")?;
    if !(lambda > 0.0 && gamma_xi > 0.0 && a > 0.0 && q >= 0.0) {
        return Err(KefError::config(
            "cf_hypergeom: need lambda, gamma_xi, a > 0 and q >= 0",
        ));
    }
    let cf = move |u: f64| -> Complex64 {
        let pref = (Complex64::new(a, -u) / a).powc(Complex64::new(-lambda / gamma_xi, 0.0));
        if q == 0.0 {
            return pref;
        }
        let z = Complex64::new(0.0, u / a);
        match special::gauss_2f1(q / gamma_xi, -lambda / gamma_xi, 1.0 + q / gamma_xi, z) {
            Ok(h) => pref * h,
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    };
    Ok(ReferenceLaw {
        name: "cf_hypergeom".into(),
        params: params.clone(),
        applicability: format!(
            "xi_t = {gamma_xi} t, eta = CP(intensity {lambda}, Exp({a}) jumps), q = {q}"
        ),
        law: LawRep::ClosedForm(ClosedFormLaw {
            cf: Some(Arc::new(cf)),
            support: (0.0, f64::INFINITY),
            ..ClosedFormLaw::default()
        }),
        sampler: None,
    })
}
