//! Empirical and closed-form law machinery: ECDF, Kolmogorov-Smirnov
//! distances, Gaussian KDE, the empirical characteristic function with
//! derivatives, and integration of test functions against a law.

use crate::error::{KefError, Result};
use crate::quad::{self, Quad, Tol};
use crate::sim::SampleBatch;
use num_complex::Complex64;
use std::sync::Arc;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ComplexFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;
/// Laplace transform bundle: `u ↦ (L(u), L'(u), L''(u))`.
pub type LaplaceFn = Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>;

/// Closed-form representation of a law on the real line with an optional
/// atom at zero. All callables are optional; checkers require what they use.
#[derive(Clone)]
pub struct ClosedFormLaw {
    pub pdf: Option<RealFn>,
    pub pdf_deriv: Option<RealFn>,
    pub cdf: Option<RealFn>,
    pub cf: Option<ComplexFn>,
    pub cf_d1: Option<ComplexFn>,
    pub cf_d2: Option<ComplexFn>,
    pub laplace: Option<LaplaceFn>,
    /// Mass at 0 (e.g. compound-Poisson η with killing).
    pub atom0: f64,
    pub support: (f64, f64),
}

impl std::fmt::Debug for ClosedFormLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosedFormLaw")
            .field("atom0", &self.atom0)
            .field("support", &self.support)
            .field("has_pdf", &self.pdf.is_some())
            .field("has_cdf", &self.cdf.is_some())
            .field("has_cf", &self.cf.is_some())
            .finish()
    }
}

impl Default for ClosedFormLaw {
    fn default() -> Self {
        ClosedFormLaw {
            pdf: None,
            pdf_deriv: None,
            cdf: None,
            cf: None,
            cf_d1: None,
            cf_d2: None,
            laplace: None,
            atom0: 0.0,
            support: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// A law of `V`: closed form or an empirical sample.
#[derive(Clone, Debug)]
pub enum LawRep {
    ClosedForm(ClosedFormLaw),
    Empirical(SampleBatch),
}

impl LawRep {
    pub fn empirical(values: Vec<f64>) -> Self {
        LawRep::Empirical(SampleBatch::from_values(values))
    }

    /// Structural invariants: normalization of the density, monotone CDF
    /// with the right limits, `φ(0) = 1`, nonempty finite samples.
    pub fn validate(&self) -> Result<()> {
        match self {
            LawRep::Empirical(b) => {
                if b.values.is_empty() {
                    return Err(KefError::domain("empirical law must be nonempty"));
                }
                if b.values.iter().any(|v| !v.is_finite()) {
                    return Err(KefError::domain("empirical law contains non-finite values"));
                }
                Ok(())
            }
            LawRep::ClosedForm(law) => {
                if let Some(pdf) = &law.pdf {
                    let mass = integrate_pdf(pdf, law.support)? + law.atom0;
                    if (mass - 1.0).abs() > 1e-6 {
                        return Err(KefError::Numeric {
                            msg: "density plus atom does not integrate to 1".into(),
                            achieved: (mass - 1.0).abs(),
                            required: 1e-6,
                        });
                    }
                }
                if let Some(cdf) = &law.cdf {
                    let (lo, hi) = clip_support(law.support);
                    let grid: Vec<f64> = (0..=60).map(|i| lo + (hi - lo) * i as f64 / 60.0).collect();
                    let mut prev = f64::NEG_INFINITY;
                    for &x in &grid {
                        let f = cdf(x);
                        if f < prev - 1e-9 {
                            return Err(KefError::domain("cdf is not nondecreasing"));
                        }
                        prev = f;
                    }
                    if cdf(lo) > 1e-4 && law.support.0.is_infinite() {
                        return Err(KefError::domain("cdf does not vanish at -inf"));
                    }
                    if (cdf(hi) - 1.0).abs() > 1e-4 {
                        return Err(KefError::domain("cdf does not reach 1"));
                    }
                }
                if let Some(cf) = &law.cf {
                    if (cf(0.0) - 1.0).norm() > 1e-9 {
                        return Err(KefError::domain("characteristic function: φ(0) ≠ 1"));
                    }
                }
                Ok(())
            }
        }
    }
}

fn clip_support(support: (f64, f64)) -> (f64, f64) {
    let lo = if support.0.is_finite() {
        support.0
    } else {
        -1e6
    };
    let hi = if support.1.is_finite() { support.1 } else { 1e6 };
    (lo, hi)
}

fn integrate_pdf(pdf: &RealFn, support: (f64, f64)) -> Result<f64> {
    let f = pdf.clone();
    let tol = Tol::new(1e-10, 1e-9);
    let q = match (support.0.is_finite(), support.1.is_finite()) {
        (true, true) => quad::quad(move |x| f(x), support.0, support.1, tol)?,
        (true, false) => quad::quad_semi_inf_rat(move |x| f(x), support.0, tol)?,
        (false, true) => quad::quad_neg_inf_rat(move |x| f(x), support.1, tol)?,
        (false, false) => {
            let a = quad::quad_neg_inf_rat({
                let f = f.clone();
                move |x| f(x)
            }, 0.0, tol)?;
            let b = quad::quad_semi_inf_rat(move |x| f(x), 0.0, tol)?;
            a.add(b)
        }
    };
    Ok(q.value)
}

/// Empirical CDF at `x`: share of values `<= x`.
pub fn ecdf(values: &[f64], x: f64) -> f64 {
    values.iter().filter(|v| **v <= x).count() as f64 / values.len() as f64
}

/// One-sample Kolmogorov-Smirnov distance against a reference CDF.
pub fn ks(values: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if values.is_empty() {
        return Err(KefError::domain("ks: empty sample"));
    }
    let mut xs = values.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(KefError::domain("ks_two_sample: empty sample"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Empirical characteristic function with first two derivatives and
/// Monte Carlo standard errors per component.
#[derive(Clone, Copy, Debug)]
pub struct EmpCf {
    pub cf: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub se_cf: f64,
    pub se_d1: f64,
    pub se_d2: f64,
}

/// `φ̂(u) = mean e^{iuV}`, `φ̂'(u) = mean iV e^{iuV}`, `φ̂''(u) = -mean V² e^{iuV}`.
pub fn emp_cf(values: &[f64], u: f64) -> EmpCf {
    let n = values.len() as f64;
    let mut s = [Complex64::new(0.0, 0.0); 3];
    let mut s2 = [0.0f64; 6]; // sums of squares of re/im per component
    for &v in values {
        let e = Complex64::new(0.0, u * v).exp();
        let terms = [e, Complex64::i() * v * e, -v * v * e];
        for (k, t) in terms.iter().enumerate() {
            s[k] += t;
            s2[2 * k] += t.re * t.re;
            s2[2 * k + 1] += t.im * t.im;
        }
    }
    let mean = [s[0] / n, s[1] / n, s[2] / n];
    let se = |k: usize| -> f64 {
        let var_re = (s2[2 * k] / n - mean[k].re * mean[k].re).max(0.0);
        let var_im = (s2[2 * k + 1] / n - mean[k].im * mean[k].im).max(0.0);
        ((var_re + var_im) / n).sqrt()
    };
    EmpCf {
        cf: mean[0],
        d1: mean[1],
        d2: mean[2],
        se_cf: se(0),
        se_d1: se(1),
        se_d2: se(2),
    }
}

/// Silverman's rule-of-thumb bandwidth `1.06 A n^{-1/5}` with the robust
/// scale `A = min(σ̂, IQR/1.34)`, so heavy-tailed samples (whose σ̂ may be
/// huge or divergent) still get a usable bandwidth.
pub fn silverman_bw(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p) as usize];
    let iqr = q(0.75) - q(0.25);
    let scale = var.sqrt().min(iqr / 1.34).max(f64::MIN_POSITIVE);
    1.06 * scale * n.powf(-0.2)
}

const INV_SQRT_2PI: f64 = 0.3989422804014327;

/// Gaussian kernel density estimate. Exact zeros are excluded from the sum
/// (they carry the atom at 0, which is never smoothed) but still count in
/// the normalization, so the estimate targets the density of `μ` away from 0.
pub fn kde(values: &[f64], z: f64, bandwidth: Option<f64>) -> f64 {
    let h = bandwidth.unwrap_or_else(|| silverman_bw(values));
    let n = values.len() as f64;
    let mut s = 0.0;
    for &v in values {
        if v == 0.0 {
            continue;
        }
        let t = (z - v) / h;
        s += (-0.5 * t * t).exp();
    }
    s * INV_SQRT_2PI / (n * h)
}

/// Derivative of the Gaussian KDE.
pub fn kde_deriv(values: &[f64], z: f64, bandwidth: Option<f64>) -> f64 {
    let h = bandwidth.unwrap_or_else(|| silverman_bw(values));
    let n = values.len() as f64;
    let mut s = 0.0;
    for &v in values {
        if v == 0.0 {
            continue;
        }
        let t = (z - v) / h;
        s += -t * (-0.5 * t * t).exp();
    }
    s * INV_SQRT_2PI / (n * h * h)
}

/// `∫_region g dμ`. Closed-form laws integrate `g·f` by adaptive quadrature
/// plus the atom contribution when `0 ∈ region`; empirical laws average
/// `g(Vᵢ) 1_{Vᵢ ∈ region}`. Region endpoints are treated as included.
pub fn integrate<G: Fn(f64) -> f64>(law: &LawRep, g: G, region: (f64, f64)) -> Result<Quad> {
    match law {
        LawRep::Empirical(b) => {
            if b.values.is_empty() {
                return Err(KefError::domain("integrate: empty batch"));
            }
            let n = b.values.len() as f64;
            let mut s = 0.0;
            let mut s2 = 0.0;
            for &v in &b.values {
                if v >= region.0 && v <= region.1 {
                    let t = g(v);
                    s += t;
                    s2 += t * t;
                }
            }
            let mean = s / n;
            let var = (s2 / n - mean * mean).max(0.0);
            Ok(Quad {
                value: mean,
                err: (var / n).sqrt(),
            })
        }
        LawRep::ClosedForm(law) => {
            let mut acc = Quad::zero();
            if law.atom0 > 0.0 && region.0 <= 0.0 && region.1 >= 0.0 {
                acc.value += law.atom0 * g(0.0);
            }
            let pdf = law
                .pdf
                .as_ref()
                .ok_or_else(|| KefError::precondition("integrate: law has no density"))?
                .clone();
            let lo = region.0.max(law.support.0);
            let hi = region.1.min(law.support.1);
            if lo >= hi {
                return Ok(acc);
            }
            let tol = Tol::default();
            let f = move |x: f64| g(x) * pdf(x);
            let q = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => quad::quad(f, lo, hi, tol)?,
                (true, false) => quad::quad_semi_inf_rat(f, lo, tol)?,
                (false, true) => quad::quad_neg_inf_rat(f, hi, tol)?,
                (false, false) => {
                    let a = quad::quad_neg_inf_rat(&f, 0.0, tol)?;
                    let b = quad::quad_semi_inf_rat(&f, 0.0, tol)?;
                    a.add(b)
                }
            };
            Ok(acc.add(q))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn ecdf_simple() {
        let b = [1.0, 2.0, 3.0];
        assert!((ecdf(&b, 2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ecdf(&b, 0.5), 0.0);
        assert_eq!(ecdf(&b, 3.5), 1.0);
    }

    #[test]
    fn ks_two_sample_identical_is_zero() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 1.0, 4.0, 3.0];
        assert!(ks_two_sample(&a, &b).unwrap() < 1e-15);
        let c = [1.0, 1.0, 1.0, 4.0];
        let d = [1.0, 1.0, 4.0, 4.0];
        assert!((ks_two_sample(&c, &d).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ks_self_sample_magnitude() {
        // Simulation oracle for the null distribution of the KS statistic:
        // over independent Exp(1) samples the median of KS·√n sits near the
        // Kolmogorov median 0.83, far below rejection thresholds.
        let n = 20_000usize;
        let mut stats = vec![];
        for seed in 0..40u64 {
            let mut rng = Rng::new(seed * 7 + 1);
            let values: Vec<f64> = (0..n).map(|_| rng.exponential(1.0)).collect();
            let d = ks(&values, |x| 1.0 - (-x).exp()).unwrap();
            stats.push(d * (n as f64).sqrt());
        }
        stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = stats[stats.len() / 2];
        assert!((0.65..=1.0).contains(&median), "median KS·√n = {median}");
        assert!(stats[0] > 0.2 && stats[stats.len() - 1] < 2.5);
    }

    #[test]
    fn emp_cf_degenerate_and_zero_frequency() {
        let zeros = vec![0.0; 10];
        let e = emp_cf(&zeros, 1.3);
        assert!((e.cf - 1.0).norm() < 1e-15);
        assert!(e.d1.norm() < 1e-15 && e.d2.norm() < 1e-15);

        let b = [0.5, 1.5, 2.0];
        let e = emp_cf(&b, 0.0);
        let mean = (0.5 + 1.5 + 2.0) / 3.0;
        let mean2 = (0.25 + 2.25 + 4.0) / 3.0;
        assert!((e.cf - 1.0).norm() < 1e-15);
        assert!((e.d1 - Complex64::new(0.0, mean)).norm() < 1e-15);
        assert!((e.d2 - Complex64::new(-mean2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn emp_cf_laplace() {
        // V ~ Laplace(0,1): φ(1) = 1/2
        let mut rng = Rng::new(4);
        let n = 40_000;
        let values: Vec<f64> =
            (0..n).map(|_| rng.exponential(1.0) - rng.exponential(1.0)).collect();
        let e = emp_cf(&values, 1.0);
        assert!((e.cf.re - 0.5).abs() < 4.0 * e.se_cf, "{} pm {}", e.cf.re, e.se_cf);
        assert!(e.cf.im.abs() < 4.0 * e.se_cf);
    }

    #[test]
    fn emp_cf_derivatives_match_finite_differences() {
        let mut rng = Rng::new(8);
        let values: Vec<f64> = (0..20_000).map(|_| rng.normal()).collect();
        let u = 0.7;
        let h = 1e-4;
        let e = emp_cf(&values, u);
        let ep = emp_cf(&values, u + h);
        let em = emp_cf(&values, u - h);
        let fd1 = (ep.cf - em.cf) / (2.0 * h);
        let fd2 = (ep.cf - 2.0 * e.cf + em.cf) / (h * h);
        assert!((fd1 - e.d1).norm() < 1e-5 + 3.0 * e.se_d1);
        assert!((fd2 - e.d2).norm() < 1e-3 + 3.0 * e.se_d2);
    }

    #[test]
    fn kde_single_point() {
        let v = [0.0f64]; // exact zero is the atom; use a nonzero point
        let v2 = [0.5f64];
        assert_eq!(kde(&v, 0.0, Some(1.0)), 0.0);
        let d = kde(&v2, 0.5, Some(1.0));
        assert!((d - INV_SQRT_2PI).abs() < 1e-15);
    }

    #[test]
    fn kde_integrates_to_one() {
        let mut rng = Rng::new(12);
        let values: Vec<f64> = (0..5_000).map(|_| rng.normal()).collect();
        let mass = quad::quad(|z| kde(&values, z, None), -8.0, 8.0, Tol::new(1e-8, 1e-7))
            .unwrap()
            .value;
        assert!((mass - 1.0).abs() < 1e-3, "mass {mass}");
    }

    #[test]
    fn kde_deriv_matches_finite_difference() {
        let mut rng = Rng::new(13);
        let values: Vec<f64> = (0..5_000).map(|_| rng.normal()).collect();
        let h = 1e-5;
        for &z in &[-0.8, 0.3, 1.4] {
            let fd = (kde(&values, z + h, Some(0.3)) - kde(&values, z - h, Some(0.3))) / (2.0 * h);
            let an = kde_deriv(&values, z, Some(0.3));
            assert!((fd - an).abs() < 1e-6, "z={z}: {fd} vs {an}");
        }
    }

    #[test]
    fn integrate_examples() {
        // total mass of a closed-form law
        let law = LawRep::ClosedForm(ClosedFormLaw {
            pdf: Some(Arc::new(|x: f64| 0.5 * (-x.abs()).exp())),
            support: (f64::NEG_INFINITY, f64::INFINITY),
            ..ClosedFormLaw::default()
        });
        let one = integrate(&law, |_| 1.0, (f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        assert!((one.value - 1.0).abs() < 1e-9);
        // Laplace(0,1): E X² = 2
        let two = integrate(&law, |x| x * x, (f64::NEG_INFINITY, f64::INFINITY)).unwrap();
        assert!((two.value - 2.0).abs() < 1e-8);
        // empirical: {1,2,3}, g = x on (1.5, ∞): (2+3)/3
        let emp = LawRep::empirical(vec![1.0, 2.0, 3.0]);
        let v = integrate(&emp, |x| x, (1.5, f64::INFINITY)).unwrap();
        assert!((v.value - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn validation_catches_bad_normalization() {
        let law = LawRep::ClosedForm(ClosedFormLaw {
            pdf: Some(Arc::new(|x: f64| (-x.abs()).exp())), // integrates to 2
            support: (f64::NEG_INFINITY, f64::INFINITY),
            ..ClosedFormLaw::default()
        });
        assert!(law.validate().is_err());
    }
}
