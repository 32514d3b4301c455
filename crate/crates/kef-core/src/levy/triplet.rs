//! Characteristic triplets and the `ξ ↔ U ↔ Ũ` transformation algebra.
//!
//! `U` is the Lévy process with stochastic exponential `E(U) = e^{-ξ}`;
//! killing at rate `q` adds the atom `q·δ_{-1}` to `ν_U` and shifts the
//! location parameter by `-q`.

use super::measure::{Iv, JumpMap, LevyMeasure};
use crate::error::{KefError, Result};
use crate::quad::{self, Tol};
use num_complex::Complex64;

/// Characteristic triplet `(σ², ν, γ)` with the truncation `1_{|x|<=1}`,
/// plus the drift `γ⁰` whenever the jump part has finite variation.
#[derive(Clone, Debug)]
pub struct LevyTriplet {
    pub sigma2: f64,
    pub nu: LevyMeasure,
    pub gamma: f64,
    pub gamma0: Option<f64>,
}

impl LevyTriplet {
    /// Build from the location parameter `γ`; derives `γ⁰` once.
    pub fn new(sigma2: f64, nu: LevyMeasure, gamma: f64) -> Result<Self> {
        if !(sigma2 >= 0.0) {
            return Err(KefError::domain("sigma2 must be >= 0"));
        }
        nu.validate()?;
        let tol = Tol::default();
        let gamma0 = Some(gamma - nu.small_signed_moment(tol)?);
        Ok(LevyTriplet {
            sigma2,
            nu,
            gamma,
            gamma0,
        })
    }

    /// Build from the drift `γ⁰` of a finite-variation jump part.
    pub fn from_drift(sigma2: f64, nu: LevyMeasure, gamma0: f64) -> Result<Self> {
        if !(sigma2 >= 0.0) {
            return Err(KefError::domain("sigma2 must be >= 0"));
        }
        nu.validate()?;
        let tol = Tol::default();
        let gamma = gamma0 + nu.small_signed_moment(tol)?;
        Ok(LevyTriplet {
            sigma2,
            nu,
            gamma,
            gamma0: Some(gamma0),
        })
    }

    /// Deterministic drift `t ↦ γ⁰ t`.
    pub fn deterministic(gamma0: f64) -> Self {
        LevyTriplet {
            sigma2: 0.0,
            nu: LevyMeasure::Zero,
            gamma: gamma0,
            gamma0: Some(gamma0),
        }
    }

    /// Brownian motion with drift: `σ B_t + γ⁰ t`.
    pub fn brownian(sigma2: f64, drift: f64) -> Self {
        LevyTriplet {
            sigma2,
            nu: LevyMeasure::Zero,
            gamma: drift,
            gamma0: Some(drift),
        }
    }

    /// Poisson process with the given intensity (unit jumps).
    pub fn poisson(intensity: f64) -> Result<Self> {
        LevyTriplet::from_drift(0.0, LevyMeasure::atoms(vec![(1.0, intensity)]), 0.0)
    }

    pub fn drift0(&self) -> Result<f64> {
        self.gamma0
            .ok_or_else(|| KefError::precondition("process has no finite-variation drift"))
    }

    /// Characteristic exponent `ψ(z)` of the Lévy-Khintchine formula.
    ///
    /// Every measure in the supported family has finite-variation jumps, so
    /// the drift form `ψ(z) = iγ⁰z - σ²z²/2 + ∫ (e^{izx}-1) ν(dx)` is used,
    /// with the jump integral in closed form where available.
    pub fn char_exponent(&self, z: f64) -> Result<Complex64> {
        let g0 = self.drift0()?;
        let mut psi = Complex64::new(-0.5 * self.sigma2 * z * z, g0 * z);
        psi += cf_jump_integral(&self.nu, z)?;
        Ok(psi)
    }

    /// Mean and variance of the time-1 marginal, when both exist. Moments
    /// that are formally finite but numerically unresolvable (tails decaying
    /// barely fast enough) are also reported unavailable.
    pub fn mean_var(&self) -> Result<Option<(f64, f64)>> {
        let tol = Tol::default();
        if !self.nu.abs_tail_moment_finite(2) {
            return Ok(None);
        }
        let tail = match self.nu.tail_signed_moment(tol) {
            Ok(Some(t)) => t,
            Ok(None) => return Ok(None),
            Err(KefError::Numeric { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let second = match self.nu.second_moment(tol) {
            Ok(Some(s)) => s,
            Ok(None) => return Ok(None),
            Err(KefError::Numeric { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(Some((self.gamma + tail, self.sigma2 + second)))
    }

    /// Mean of the time-1 marginal when the first absolute moment is finite.
    pub fn mean(&self) -> Result<Option<f64>> {
        let tol = Tol::default();
        match self.nu.tail_signed_moment(tol)? {
            Some(t) => Ok(Some(self.gamma + t)),
            None => Ok(None),
        }
    }

    /// True when the jump part is of finite variation (always holds in the
    /// supported family) and the Gaussian part vanishes.
    pub fn finite_variation(&self) -> bool {
        self.sigma2 == 0.0 && self.gamma0.is_some()
    }

    pub fn is_subordinator(&self) -> Result<bool> {
        Ok(self.sigma2 == 0.0
            && self.nu.mass_below(0.0, false) == 0.0
            && self.drift0()? >= 0.0)
    }

    pub fn is_zero_process(&self) -> bool {
        self.sigma2 == 0.0 && self.nu.is_zero() && self.gamma == 0.0
    }
}

/// `∫ (e^{izx} - 1) ν(dx)` with closed forms per family.
fn cf_jump_integral(nu: &LevyMeasure, z: f64) -> Result<Complex64> {
    let i = Complex64::i();
    match nu {
        LevyMeasure::Zero => Ok(Complex64::new(0.0, 0.0)),
        LevyMeasure::Atoms(atoms) => {
            let mut s = Complex64::new(0.0, 0.0);
            for a in atoms {
                s += a.mass * ((i * z * a.position).exp() - 1.0);
            }
            Ok(s)
        }
        LevyMeasure::TwoSidedExp {
            rate,
            scale_neg,
            scale_pos,
        } => {
            let a = *rate;
            let pos = scale_pos * (a / (Complex64::new(a, -z)) - 1.0);
            let neg = scale_neg * (a / (Complex64::new(a, z)) - 1.0);
            Ok(pos + neg)
        }
        LevyMeasure::CompoundPoissonExp {
            intensity,
            jump_rate,
        } => {
            let a = *jump_rate;
            Ok(*intensity * (i * z) / Complex64::new(a, -z))
        }
        LevyMeasure::Sum(parts) => {
            let mut s = Complex64::new(0.0, 0.0);
            for p in parts {
                s += cf_jump_integral(p, z)?;
            }
            Ok(s)
        }
        dens => cf_density_integral(dens, z),
    }
}

/// Quadrature of `∫ (e^{izx} - 1) ν(dx)` for density-type measures
/// (Mittag-Leffler and jump-map images). The bulk is integrated directly;
/// slowly decaying oscillatory tails (images of exponential tails become
/// polynomial) are summed between oscillation zeros with iterated
/// averaging of the partial sums.
fn cf_density_integral(dens: &LevyMeasure, z: f64) -> Result<Complex64> {
    if z == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let tol = Tol::default();
    let bps = dens.breakpoints();
    let w_pos = bps.iter().cloned().fold(3.0f64, f64::max) + 1.0;
    let w_neg = bps.iter().cloned().fold(-3.0f64, f64::min) - 1.0;

    // window part, O(x²) near zero
    let re = dens.integrate(&|x| (z * x).cos() - 1.0, Iv::new(w_neg, w_pos, true, true), tol)?;
    let im = dens.integrate(&|x| (z * x).sin(), Iv::new(w_neg, w_pos, true, true), tol)?;
    let mut total = Complex64::new(re.value, im.value);

    // tails: ∫ e^{izx} ν(dx) - ν(tail)
    let tail_mass = dens.mass_above(w_pos, true) + dens.mass_below(w_neg, true);
    total -= tail_mass;
    total += oscillatory_tail(&|x| dens.density_at(x), w_pos, z, 1.0)?;
    total += oscillatory_tail(&|x| dens.density_at(-x), -w_neg, z, -1.0)?;
    Ok(total)
}

/// `∫_{w}^{∞} e^{i z·side·x} f(x) dx` for a nonnegative decreasing envelope
/// `f`: summed over half-periods of the oscillation with repeated averaging
/// of the partial sums (Euler-style acceleration for alternating series).
fn oscillatory_tail(
    f: &dyn Fn(f64) -> f64,
    w: f64,
    z: f64,
    side: f64,
) -> Result<Complex64> {
    if f(w) == 0.0 && f(w * 1.5 + 1.0) == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let tol = Tol::new(1e-13, 1e-11);
    let half = std::f64::consts::PI / z.abs();
    const SEGS: usize = 48;
    let mut partial = Vec::with_capacity(SEGS);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..SEGS {
        let a = w + k as f64 * half;
        let b = a + half;
        let re = quad::quad(|x| (z * side * x).cos() * f(x), a, b, tol)?;
        let im = quad::quad(|x| (z * side * x).sin() * f(x), a, b, tol)?;
        acc += Complex64::new(re.value, im.value);
        partial.push(acc);
        if f(b) < 1e-15 {
            return Ok(acc);
        }
    }
    // iterated averaging: for alternating segments with slowly varying
    // envelope this converges geometrically
    let mut s = partial;
    while s.len() > 1 {
        for i in 0..s.len() - 1 {
            s[i] = 0.5 * (s[i] + s[i + 1]);
        }
        s.pop();
    }
    Ok(s[0])
}

const LN_2: f64 = std::f64::consts::LN_2;

/// Triplet of `U` with `E(U) = e^{-ξ}`:
/// `σ_U² = σ_ξ²`, `ν_U = h(ν_ξ)` and
/// `γ_U = -γ_ξ + σ_ξ²/2 + ∫ [x·1_{|x|<=1} + h(x)·1_{|h(x)|<=1}] ν_ξ(dx)`
/// with `h(x) = e^{-x} - 1` (so `|h(x)| <= 1` is `x >= -ln 2`).
pub fn xi_to_u(xi: &LevyTriplet) -> Result<LevyTriplet> {
    let tol = Tol::new(1e-12, 1e-10);
    let w = |x: f64| {
        let mut v = 0.0;
        if x.abs() <= 1.0 {
            v += x;
        }
        if x >= -LN_2 {
            v += (-x).exp_m1();
        }
        v
    };
    // integrand is O(x²) near zero; split at every kink of the truncation
    // indicators and of the measure density
    let mut cuts = vec![f64::NEG_INFINITY, -1.0, -LN_2, 0.0, 1.0, f64::INFINITY];
    cuts.extend(xi.nu.breakpoints());
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut corr = crate::quad::Quad::zero();
    for pair in cuts.windows(2) {
        corr = corr.add(
            xi.nu
                .integrate(&w, Iv::new(pair[0], pair[1], false, true), tol)?,
        );
    }
    let gamma_u = -xi.gamma + 0.5 * xi.sigma2 + corr.value;
    LevyTriplet::new(xi.sigma2, xi.nu.map(JumpMap::ExpM1Neg), gamma_u)
}

/// Inverse of [`xi_to_u`]:
/// `γ_ξ = -γ_U + σ_U²/2 + ∫ [y·1_{|y|<=1} + g(y)·1_{|g(y)|<=1}] ν_U(dy)`
/// with `g(y) = -ln(1+y)` (so `|g(y)| <= 1` is `y ∈ [e^{-1}-1, e-1]`).
///
/// Fails when `ν_U` puts mass on `(-∞, -1]`: such jumps have no `ξ` preimage.
pub fn u_to_xi(u: &LevyTriplet) -> Result<LevyTriplet> {
    let below = u.nu.mass_below(-1.0, false);
    if below > 0.0 {
        return Err(KefError::domain(format!(
            "nu_U has mass {below} on (-inf,-1]; jumps of size <= -1 cannot come from a stochastic exponential"
        )));
    }
    let tol = Tol::new(1e-12, 1e-10);
    let lo = (-1.0f64).exp_m1(); // e^{-1} - 1
    let hi = 1.0f64.exp() - 1.0; // e - 1
    let w = |y: f64| {
        let mut v = 0.0;
        if y.abs() <= 1.0 {
            v += y;
        }
        if y >= lo && y <= hi {
            v += -y.ln_1p();
        }
        v
    };
    let mut cuts = vec![-1.0, lo, 0.0, 1.0, hi, f64::INFINITY];
    cuts.extend(u.nu.breakpoints());
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut corr = crate::quad::Quad::zero();
    for pair in cuts.windows(2) {
        corr = corr.add(
            u.nu
                .integrate(&w, Iv::new(pair[0], pair[1], false, true), tol)?,
        );
    }
    let gamma_xi = -u.gamma + 0.5 * u.sigma2 + corr.value;
    LevyTriplet::new(u.sigma2, u.nu.map(JumpMap::NegLn1p), gamma_xi)
}

/// Kill at rate `q >= 0`: triplet of `Ũ = U - N` for an independent Poisson
/// process `N` with rate `q`, i.e. `(σ_U², ν_U + qδ_{-1}, γ_U - q)`.
pub fn kill(u: &LevyTriplet, q: f64) -> Result<LevyTriplet> {
    if !(q >= 0.0) {
        return Err(KefError::domain("killing rate q must be >= 0"));
    }
    if q == 0.0 {
        return Ok(u.clone());
    }
    let kill_atom = LevyMeasure::atoms(vec![(-1.0, q)]);
    let nu = match &u.nu {
        LevyMeasure::Zero => kill_atom,
        LevyMeasure::Atoms(atoms) => {
            let mut atoms = atoms.clone();
            atoms.push(super::measure::Atom {
                position: -1.0,
                mass: q,
            });
            LevyMeasure::Atoms(atoms)
        }
        LevyMeasure::Sum(parts) => {
            let mut parts = parts.clone();
            parts.push(kill_atom);
            LevyMeasure::Sum(parts)
        }
        other => LevyMeasure::Sum(vec![other.clone(), kill_atom]),
    };
    LevyTriplet::new(u.sigma2, nu, u.gamma - q)
}

/// Sufficient moment condition for `E V² < ∞`:
/// `E U₁² < ∞`, `E η₁² < ∞` and `2 E U₁ + Var U₁ < q`.
pub fn second_moment_condition(xi: &LevyTriplet, eta: &LevyTriplet, q: f64) -> Result<bool> {
    let u = xi_to_u(xi)?;
    let (mu, vu) = match u.mean_var()? {
        Some(mv) => mv,
        None => return Ok(false),
    };
    if eta.mean_var()?.is_none() {
        return Ok(false);
    }
    Ok(2.0 * mu + vu < q)
}

/// Simple sufficient condition for almost-sure convergence of the unkilled
/// functional: `E ξ₁` exists with `E ξ₁ > 0`, and `E |η₁| < ∞`.
pub fn q0_sufficient_convergence(xi: &LevyTriplet, eta: &LevyTriplet) -> Result<bool> {
    let mean_xi = match xi.mean()? {
        Some(m) => m,
        None => return Ok(false),
    };
    Ok(mean_xi > 0.0 && eta.mean()?.is_some())
}

/// Structural class of a process, deciding which simulation scheme applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructuralTag {
    Deterministic,
    BrownianDrift,
    CompoundPoissonDrift,
    InfiniteActivity,
}

/// Role labels for the processes handled by the toolkit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Xi,
    Eta,
    U,
    Utilde,
}

/// A process with its triplet, role label and structural tag.
#[derive(Clone, Debug)]
pub struct ProcessSpec {
    pub triplet: LevyTriplet,
    pub role: Role,
    pub tag: StructuralTag,
}

impl ProcessSpec {
    pub fn new(triplet: LevyTriplet, role: Role) -> Self {
        let tag = structural_tag(&triplet);
        ProcessSpec { triplet, role, tag }
    }
}

pub fn structural_tag(t: &LevyTriplet) -> StructuralTag {
    if t.nu.infinite_activity() {
        StructuralTag::InfiniteActivity
    } else if t.sigma2 > 0.0 {
        StructuralTag::BrownianDrift
    } else if t.nu.is_zero() {
        StructuralTag::Deterministic
    } else {
        StructuralTag::CompoundPoissonDrift
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn char_exponent_brownian() {
        let bm = LevyTriplet::brownian(1.0, 0.0);
        let psi = bm.char_exponent(2.0).unwrap();
        assert!(close(psi.re, -2.0, 1e-14) && psi.im.abs() < 1e-14);
    }

    #[test]
    fn char_exponent_cp_exponential() {
        // ψ(u) = λ iu / (a - iu)
        let lambda = 1.7;
        let a = 2.3;
        let nu = LevyMeasure::CompoundPoissonExp {
            intensity: lambda,
            jump_rate: a,
        };
        let t = LevyTriplet::from_drift(0.0, nu, 0.0).unwrap();
        for &u in &[0.3, 1.0, 4.0] {
            let psi = t.char_exponent(u).unwrap();
            let expected = lambda * Complex64::new(0.0, u) / Complex64::new(a, -u);
            assert!((psi - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn char_exponent_poisson_atom() {
        let c = 0.8;
        let t = LevyTriplet::poisson(c).unwrap();
        assert!((t.gamma - c).abs() < 1e-12);
        for &z in &[0.5, 2.0] {
            let psi = t.char_exponent(z).unwrap();
            let expected = c * ((Complex64::i() * z).exp() - 1.0);
            assert!((psi - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn xi_to_u_brownian_drift() {
        // ξ = 2B + g t  (σ²=4): U = (4, Zero, -g + 2)
        let g = 0.7;
        let xi = LevyTriplet::brownian(4.0, g);
        let u = xi_to_u(&xi).unwrap();
        assert!(u.nu.is_zero());
        assert!(close(u.sigma2, 4.0, 1e-14));
        assert!(close(u.gamma, -g + 2.0, 1e-12), "gamma_u = {}", u.gamma);
        let back = u_to_xi(&u).unwrap();
        assert!(close(back.gamma, g, 1e-12));
    }

    #[test]
    fn xi_to_u_poisson_atom() {
        // ξ Poisson(c): ν_U = c δ_{e^{-1}-1}, drift γ_U⁰ = -γ_ξ⁰ = 0
        let c = 1.3;
        let xi = LevyTriplet::poisson(c).unwrap();
        let u = xi_to_u(&xi).unwrap();
        let pos = (-1.0f64).exp_m1();
        assert!(close(u.nu.mass_below(pos, false), c, 1e-12));
        assert!(close(u.gamma, c * pos, 1e-10), "gamma_u={}", u.gamma);
        assert!(u.gamma0.unwrap().abs() < 1e-10);
        let back = u_to_xi(&u).unwrap();
        assert!(close(back.gamma, xi.gamma, 1e-10));
        assert!(close(back.nu.mass_above(0.5, true), c, 1e-12));
    }

    #[test]
    fn u_to_xi_rejects_large_negative_jumps() {
        let u = LevyTriplet::from_drift(0.0, LevyMeasure::atoms(vec![(-1.0, 0.5)]), 0.0).unwrap();
        assert!(u_to_xi(&u).is_err());
    }

    #[test]
    fn drifts_negate_for_finite_variation() {
        let nu = LevyMeasure::TwoSidedExp {
            rate: 3.0,
            scale_neg: 0.4,
            scale_pos: 0.9,
        };
        let xi = LevyTriplet::from_drift(0.0, nu, 0.55).unwrap();
        let u = xi_to_u(&xi).unwrap();
        assert!(
            close(u.gamma0.unwrap(), -0.55, 1e-9),
            "drift_u = {}",
            u.gamma0.unwrap()
        );
    }

    #[test]
    fn kill_adds_atom_and_shifts_gamma() {
        let u = LevyTriplet::brownian(4.0, 2.0);
        let ut = kill(&u, 2.0).unwrap();
        assert!(close(ut.nu.mass_below(-1.0, false), 2.0, 1e-14));
        assert!(close(ut.gamma, 0.0, 1e-14));
        // kill(t, 0) = t
        let same = kill(&u, 0.0).unwrap();
        assert!(close(same.gamma, u.gamma, 1e-15));
        assert!(kill(&u, -1.0).is_err());
        // ξ ≡ 0 gives the pure killing triplet (0, qδ_{-1}, -q)
        let zero = LevyTriplet::deterministic(0.0);
        let ut = kill(&xi_to_u(&zero).unwrap(), 2.0).unwrap();
        assert!(close(ut.gamma, -2.0, 1e-14));
        assert_eq!(ut.sigma2, 0.0);
    }

    #[test]
    fn kill_char_exponent_shift() {
        // ψ_Ũ(z) = ψ_U(z) + q (e^{-iz} - 1)
        let xi = LevyTriplet::poisson(0.9).unwrap();
        let u = xi_to_u(&xi).unwrap();
        let q = 1.7;
        let ut = kill(&u, q).unwrap();
        for &z in &[0.4, 1.0, 3.3, -2.2] {
            let lhs = ut.char_exponent(z).unwrap();
            let rhs = u.char_exponent(z).unwrap()
                + q * ((Complex64::new(0.0, -z)).exp() - 1.0);
            assert!((lhs - rhs).norm() < 1e-10, "z={z}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn mean_var_examples() {
        let bm = LevyTriplet::brownian(1.0, 0.0);
        assert_eq!(bm.mean_var().unwrap(), Some((0.0, 1.0)));
        let poisson = LevyTriplet::poisson(1.4).unwrap();
        let (m, v) = poisson.mean_var().unwrap().unwrap();
        assert!(close(m, 1.4, 1e-12) && close(v, 1.4, 1e-12));
        // ν = e^{-|x|} dx with drift chosen so γ⁰ = 0: mean 0, var 4
        let nu = LevyMeasure::TwoSidedExp {
            rate: 1.0,
            scale_neg: 1.0,
            scale_pos: 1.0,
        };
        let t = LevyTriplet::from_drift(0.0, nu, 0.0).unwrap();
        let (m, v) = t.mean_var().unwrap().unwrap();
        assert!(m.abs() < 1e-9 && close(v, 4.0, 1e-8), "({m},{v})");
    }

    #[test]
    fn second_moment_condition_examples() {
        let det1 = LevyTriplet::deterministic(1.0);
        // ξ_t = t, η_t = t: U₁ = -1, Var 0, so 2E[U₁]+Var = -2 < q
        assert!(second_moment_condition(&det1, &det1, 1.0).unwrap());
        assert!(second_moment_condition(&det1, &det1, 0.0).unwrap());
        // ξ = 2B: E U₁ = 2, Var U₁ = 4, 2·2+4 = 8 > 2
        let xi = LevyTriplet::brownian(4.0, 0.0);
        assert!(!second_moment_condition(&xi, &det1, 2.0).unwrap());
        assert!(second_moment_condition(&xi, &det1, 8.5).unwrap());
    }

    #[test]
    fn q0_convergence_gate() {
        let xi = LevyTriplet::deterministic(1.0);
        let eta = LevyTriplet::brownian(1.0, 0.0);
        assert!(q0_sufficient_convergence(&xi, &eta).unwrap());
        let xi_bad = LevyTriplet::deterministic(-1.0);
        assert!(!q0_sufficient_convergence(&xi_bad, &eta).unwrap());
    }
}
