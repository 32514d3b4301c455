//! Lévy measures: a closed family of atoms, parametric densities, finite
//! sums and images under the jump maps `h(x) = e^{-x} - 1` and
//! `g(y) = -ln(1+y)` that connect `ξ` and `U`.

use crate::error::{KefError, Result};
use crate::quad::{self, Quad, Tol};
use crate::rng::Rng;
use crate::special;
use serde::{Deserialize, Serialize};

/// Point mass of a Lévy measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// Jump transformation applied pathwise when moving between `ξ` and `U`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpMap {
    /// `h(x) = e^{-x} - 1`, mapping jumps of `ξ` to jumps of `U`.
    ExpM1Neg,
    /// `g(y) = -ln(1+y)`, mapping jumps of `U` back to jumps of `ξ`.
    NegLn1p,
}

impl JumpMap {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            JumpMap::ExpM1Neg => (-x).exp_m1(),
            JumpMap::NegLn1p => -x.ln_1p(),
        }
    }

    /// Inverse map; both maps are strictly decreasing bijections onto their
    /// ranges, inverse of each other.
    #[inline]
    pub fn invert(self, y: f64) -> f64 {
        match self {
            JumpMap::ExpM1Neg => -y.ln_1p(),
            JumpMap::NegLn1p => (-y).exp_m1(),
        }
    }

    /// Forward map with infinities handled.
    pub fn apply_ext(self, x: f64) -> f64 {
        match self {
            JumpMap::ExpM1Neg => {
                if x == f64::INFINITY {
                    -1.0
                } else if x == f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    (-x).exp_m1()
                }
            }
            JumpMap::NegLn1p => {
                if x <= -1.0 {
                    f64::INFINITY
                } else if x == f64::INFINITY {
                    f64::NEG_INFINITY
                } else {
                    -x.ln_1p()
                }
            }
        }
    }

    /// Image of a point under the inverse map with infinities handled.
    fn invert_ext(self, y: f64) -> f64 {
        match self {
            JumpMap::ExpM1Neg => {
                if y <= -1.0 {
                    f64::INFINITY
                } else if y == f64::INFINITY {
                    f64::NEG_INFINITY
                } else {
                    -y.ln_1p()
                }
            }
            JumpMap::NegLn1p => {
                if y == f64::NEG_INFINITY {
                    f64::INFINITY
                } else if y == f64::INFINITY {
                    -1.0
                } else {
                    (-y).exp_m1()
                }
            }
        }
    }
}

/// Interval with explicit endpoint inclusion, used so that tail functions
/// of atomic measures honor open/closed bounds exactly.
#[derive(Clone, Copy, Debug)]
pub struct Iv {
    pub lo: f64,
    pub hi: f64,
    pub lo_incl: bool,
    pub hi_incl: bool,
}

impl Iv {
    pub fn new(lo: f64, hi: f64, lo_incl: bool, hi_incl: bool) -> Self {
        Iv {
            lo,
            hi,
            lo_incl,
            hi_incl,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Iv::new(lo, hi, true, true)
    }

    pub fn all() -> Self {
        Iv::new(f64::NEG_INFINITY, f64::INFINITY, false, false)
    }

    pub fn above(x: f64, incl: bool) -> Self {
        Iv::new(x, f64::INFINITY, incl, false)
    }

    pub fn below(x: f64, incl: bool) -> Self {
        Iv::new(f64::NEG_INFINITY, x, false, incl)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = x > self.lo || (self.lo_incl && x == self.lo);
        let below = x < self.hi || (self.hi_incl && x == self.hi);
        above && below
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_incl && self.hi_incl))
    }

    /// Preimage under `map`: both jump maps are decreasing, so bounds swap.
    fn preimage(&self, map: JumpMap) -> Iv {
        Iv {
            lo: map.invert_ext(self.hi),
            hi: map.invert_ext(self.lo),
            lo_incl: self.hi_incl,
            hi_incl: self.lo_incl,
        }
    }
}

/// Lévy measure of a process in the supported parametric family.
#[derive(Clone, Debug)]
pub enum LevyMeasure {
    /// No jumps.
    Zero,
    /// Finite collection of point masses away from zero.
    Atoms(Vec<Atom>),
    /// Density `c₊ a e^{-a x}` on x>0 plus `c₋ a e^{-a|x|}` on x<0, scaled so
    /// that the one-sided masses are `c₊` and `c₋`.
    ///
    /// Stored unnormalized as `scale_pos e^{-rate·x}` / `scale_neg e^{-rate·|x|}`.
    TwoSidedExp {
        rate: f64,
        scale_neg: f64,
        scale_pos: f64,
    },
    /// Compound Poisson: `intensity` arrivals per unit time with
    /// Exp(`jump_rate`) jump sizes, i.e. density `intensity·jump_rate·e^{-jump_rate·x}` on x>0.
    CompoundPoissonExp { intensity: f64, jump_rate: f64 },
    /// Infinite-activity subordinator with density
    /// `e^{-x/α} (1-e^{-x/α})^{-(α+1)} / Γ(1-α)` on x>0.
    MlSubordinator { alpha: f64 },
    /// Superposition.
    Sum(Vec<LevyMeasure>),
    /// Image of another measure under a jump map.
    Image(Box<LevyMeasure>, JumpMap),
}

impl LevyMeasure {
    pub fn atoms(list: Vec<(f64, f64)>) -> Self {
        LevyMeasure::Atoms(
            list.into_iter()
                .map(|(position, mass)| Atom { position, mass })
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LevyMeasure::Zero => true,
            LevyMeasure::Atoms(a) => a.is_empty(),
            LevyMeasure::Sum(parts) => parts.iter().all(|p| p.is_zero()),
            LevyMeasure::Image(inner, _) => inner.is_zero(),
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_inner(false)
    }

    fn validate_inner(&self, inside_image: bool) -> Result<()> {
        match self {
            LevyMeasure::Zero => Ok(()),
            LevyMeasure::Atoms(atoms) => {
                for a in atoms {
                    if a.position == 0.0 || !a.position.is_finite() {
                        return Err(KefError::domain("atom at 0 or non-finite position"));
                    }
                    if !(a.mass > 0.0) {
                        return Err(KefError::domain("atom mass must be > 0"));
                    }
                }
                Ok(())
            }
            LevyMeasure::TwoSidedExp {
                rate,
                scale_neg,
                scale_pos,
            } => {
                if !(*rate > 0.0) || *scale_neg < 0.0 || *scale_pos < 0.0 {
                    return Err(KefError::domain("two-sided exponential: need rate>0, scales>=0"));
                }
                Ok(())
            }
            LevyMeasure::CompoundPoissonExp {
                intensity,
                jump_rate,
            } => {
                if !(*intensity > 0.0) || !(*jump_rate > 0.0) {
                    return Err(KefError::domain("compound Poisson: need intensity>0, jump_rate>0"));
                }
                Ok(())
            }
            LevyMeasure::MlSubordinator { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(KefError::domain("ml subordinator: alpha must lie in (0,1)"));
                }
                Ok(())
            }
            LevyMeasure::Sum(parts) => {
                for p in parts {
                    p.validate_inner(inside_image)?;
                }
                Ok(())
            }
            LevyMeasure::Image(inner, _) => {
                if inside_image {
                    return Err(KefError::domain("nested image measures are not supported"));
                }
                inner.validate_inner(true)
            }
        }
    }

    /// Image under a jump map. Atoms map exactly; `g(h(ν)) = ν` collapses.
    pub fn map(&self, map: JumpMap) -> LevyMeasure {
        match self {
            LevyMeasure::Zero => LevyMeasure::Zero,
            LevyMeasure::Atoms(atoms) => LevyMeasure::Atoms(
                atoms
                    .iter()
                    .map(|a| Atom {
                        position: map.apply(a.position),
                        mass: a.mass,
                    })
                    .collect(),
            ),
            LevyMeasure::Sum(parts) => {
                LevyMeasure::Sum(parts.iter().map(|p| p.map(map)).collect())
            }
            LevyMeasure::Image(inner, inner_map) if *inner_map != map => {
                // The two maps are mutually inverse.
                (**inner).clone()
            }
            other => LevyMeasure::Image(Box::new(other.clone()), map),
        }
    }

    /// Total mass; `∞` for infinite-activity measures.
    pub fn total_mass(&self) -> f64 {
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::Atoms(atoms) => atoms.iter().map(|a| a.mass).sum(),
            LevyMeasure::TwoSidedExp {
                rate,
                scale_neg,
                scale_pos,
            } => (scale_neg + scale_pos) / rate,
            LevyMeasure::CompoundPoissonExp { intensity, .. } => *intensity,
            LevyMeasure::MlSubordinator { .. } => f64::INFINITY,
            LevyMeasure::Sum(parts) => parts.iter().map(|p| p.total_mass()).sum(),
            LevyMeasure::Image(inner, _) => inner.total_mass(),
        }
    }

    pub fn infinite_activity(&self) -> bool {
        !self.total_mass().is_finite()
    }

    /// `ν((x, ∞))` (strict) or `ν([x, ∞))`.
    pub fn mass_above(&self, x: f64, strict: bool) -> f64 {
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::Atoms(atoms) => atoms
                .iter()
                .filter(|a| a.position > x || (!strict && a.position == x))
                .map(|a| a.mass)
                .sum(),
            LevyMeasure::TwoSidedExp {
                rate,
                scale_neg,
                scale_pos,
            } => {
                if x >= 0.0 {
                    scale_pos / rate * (-rate * x).exp()
                } else {
                    scale_pos / rate + scale_neg / rate * (-(-rate * x).exp_m1())
                }
            }
            LevyMeasure::CompoundPoissonExp {
                intensity,
                jump_rate,
            } => {
                if x <= 0.0 {
                    *intensity
                } else {
                    intensity * (-jump_rate * x).exp()
                }
            }
            LevyMeasure::MlSubordinator { alpha } => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    ml_nu_tail(x, *alpha)
                }
            }
            LevyMeasure::Sum(parts) => parts.iter().map(|p| p.mass_above(x, strict)).sum(),
            LevyMeasure::Image(inner, map) => {
                // map is decreasing: {m(y) > x} = {y < m^{-1}(x)}.
                match map {
                    JumpMap::ExpM1Neg if x <= -1.0 => inner.total_mass(),
                    _ => inner.mass_below(map.invert_ext(x), strict),
                }
            }
        }
    }

    /// `ν((-∞, x))` (strict) or `ν((-∞, x])`.
    pub fn mass_below(&self, x: f64, strict: bool) -> f64 {
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::Atoms(atoms) => atoms
                .iter()
                .filter(|a| a.position < x || (!strict && a.position == x))
                .map(|a| a.mass)
                .sum(),
            LevyMeasure::TwoSidedExp {
                rate,
                scale_neg,
                scale_pos,
            } => {
                if x <= 0.0 {
                    scale_neg / rate * (rate * x).exp()
                } else {
                    scale_neg / rate + scale_pos / rate * (-(-rate * x).exp_m1())
                }
            }
            LevyMeasure::CompoundPoissonExp {
                intensity,
                jump_rate,
            } => {
                if x <= 0.0 {
                    0.0
                } else {
                    intensity * (-(-jump_rate * x).exp_m1())
                }
            }
            LevyMeasure::MlSubordinator { .. } => {
                if x <= 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            LevyMeasure::Sum(parts) => parts.iter().map(|p| p.mass_below(x, strict)).sum(),
            LevyMeasure::Image(inner, map) => match map {
                JumpMap::ExpM1Neg if x <= -1.0 => 0.0,
                _ => inner.mass_above(map.invert_ext(x), strict),
            },
        }
    }

    /// Pointwise Lebesgue density of the absolutely continuous part.
    pub fn density_at(&self, y: f64) -> f64 {
        match self {
            LevyMeasure::Zero | LevyMeasure::Atoms(_) => 0.0,
            LevyMeasure::TwoSidedExp {
                rate,
                scale_neg,
                scale_pos,
            } => {
                if y > 0.0 {
                    scale_pos * rate * (-rate * y).exp()
                } else if y < 0.0 {
                    scale_neg * rate * (rate * y).exp()
                } else {
                    0.5 * rate * (scale_neg + scale_pos)
                }
            }
            LevyMeasure::CompoundPoissonExp {
                intensity,
                jump_rate,
            } => {
                if y > 0.0 {
                    intensity * jump_rate * (-jump_rate * y).exp()
                } else {
                    0.0
                }
            }
            LevyMeasure::MlSubordinator { alpha } => ml_nu_density(y, *alpha),
            LevyMeasure::Sum(parts) => parts.iter().map(|p| p.density_at(y)).sum(),
            LevyMeasure::Image(inner, map) => match map {
                JumpMap::ExpM1Neg => {
                    if y <= -1.0 {
                        0.0
                    } else {
                        inner.density_at(-y.ln_1p()) / (1.0 + y)
                    }
                }
                JumpMap::NegLn1p => inner.density_at((-y).exp_m1()) * (-y).exp(),
            },
        }
    }

    /// Positions where the measure has structure (atoms, support edges);
    /// used to split quadratures at kinks.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            LevyMeasure::Zero => vec![],
            LevyMeasure::Atoms(atoms) => atoms.iter().map(|a| a.position).collect(),
            LevyMeasure::TwoSidedExp { .. } => vec![0.0],
            LevyMeasure::CompoundPoissonExp { .. } => vec![0.0],
            LevyMeasure::MlSubordinator { .. } => vec![0.0],
            LevyMeasure::Sum(parts) => {
                let mut v: Vec<f64> = parts.iter().flat_map(|p| p.breakpoints()).collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v.dedup();
                v
            }
            LevyMeasure::Image(inner, map) => {
                let mut v: Vec<f64> = inner
                    .breakpoints()
                    .into_iter()
                    .map(|x| map.apply(x))
                    .collect();
                // support edge of the image of a subordinator
                v.push(map.apply(0.0));
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v.dedup();
                v
            }
        }
    }

    /// `∫_iv w dν`. The caller is responsible for `w` being ν-integrable on
    /// `iv` (in particular `w(x) = O(x²)` near 0 when 0 is in the interval
    /// and the measure has infinite activity).
    pub fn integrate(&self, w: &dyn Fn(f64) -> f64, iv: Iv, tol: Tol) -> Result<Quad> {
        if iv.is_empty() {
            return Ok(Quad::zero());
        }
        match self {
            LevyMeasure::Zero => Ok(Quad::zero()),
            LevyMeasure::Atoms(atoms) => {
                let mut s = 0.0;
                for a in atoms {
                    if iv.contains(a.position) {
                        s += a.mass * w(a.position);
                    }
                }
                Ok(Quad { value: s, err: 0.0 })
            }
            LevyMeasure::TwoSidedExp {
                rate,
                scale_neg,
                scale_pos,
            } => {
                let mut acc = Quad::zero();
                let a = *rate;
                if *scale_pos > 0.0 {
                    let c = scale_pos * a;
                    acc = acc.add(density_integral(
                        &|x| {
                            let d = c * (-a * x).exp();
                            if d == 0.0 { 0.0 } else { w(x) * d }
                        },
                        iv,
                        0.0,
                        f64::INFINITY,
                        tol,
                    )?);
                }
                if *scale_neg > 0.0 {
                    let c = scale_neg * a;
                    acc = acc.add(density_integral(
                        &|x| {
                            let d = c * (a * x).exp();
                            if d == 0.0 { 0.0 } else { w(x) * d }
                        },
                        iv,
                        f64::NEG_INFINITY,
                        0.0,
                        tol,
                    )?);
                }
                Ok(acc)
            }
            LevyMeasure::CompoundPoissonExp {
                intensity,
                jump_rate,
            } => {
                let c = intensity * jump_rate;
                let a = *jump_rate;
                density_integral(
                    &|x| {
                        let d = c * (-a * x).exp();
                        if d == 0.0 { 0.0 } else { w(x) * d }
                    },
                    iv,
                    0.0,
                    f64::INFINITY,
                    tol,
                )
            }
            LevyMeasure::MlSubordinator { alpha } => {
                let al = *alpha;
                density_integral(
                    &|x| {
                        let d = ml_nu_density(x, al);
                        if d == 0.0 { 0.0 } else { w(x) * d }
                    },
                    iv,
                    0.0,
                    f64::INFINITY,
                    tol,
                )
            }
            LevyMeasure::Sum(parts) => {
                let mut acc = Quad::zero();
                for p in parts {
                    acc = acc.add(p.integrate(w, iv, tol)?);
                }
                Ok(acc)
            }
            LevyMeasure::Image(inner, map) => {
                // Pullback to the base coordinates where the density is
                // exponential and smooth; but the far right tail (images of
                // heavy negative base tails blow up like e^{|x|}) is
                // integrated in image coordinates against the polynomial
                // density, where no f64 factor overflows.
                let m = *map;
                let (supp_lo, supp_hi) = {
                    let (ilo, ihi) = inner.support();
                    let a = m.apply_ext(ihi);
                    let b = m.apply_ext(ilo);
                    (a.min(b), a.max(b))
                };
                let lo = iv.lo.max(supp_lo);
                let hi = iv.hi.min(supp_hi);
                if lo >= hi {
                    return Ok(Quad::zero());
                }
                let y_split = 6.0;
                if hi <= y_split {
                    return inner.integrate(
                        &|x| w(m.apply(x)),
                        Iv {
                            lo,
                            hi,
                            lo_incl: iv.lo_incl || lo > iv.lo,
                            hi_incl: iv.hi_incl || hi < iv.hi,
                        }
                        .preimage(m),
                        tol,
                    );
                }
                let head = inner.integrate(
                    &|x| w(m.apply(x)),
                    Iv::new(lo, y_split, iv.lo_incl || lo > iv.lo, true)
                        .preimage(m),
                    tol,
                )?;
                let me = self.clone();
                let f = move |y: f64| {
                    let d = me.density_at(y);
                    if d == 0.0 {
                        0.0
                    } else {
                        w(y) * d
                    }
                };
                let tail = if hi.is_finite() {
                    quad::quad(&f, y_split, hi, tol)?
                } else {
                    quad::quad_semi_inf_rat(&f, y_split, tol)?
                };
                Ok(head.add(tail))
            }
        }
    }

    /// Support hull of the measure.
    pub fn support(&self) -> (f64, f64) {
        match self {
            LevyMeasure::Zero => (0.0, 0.0),
            LevyMeasure::Atoms(atoms) => atoms.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), a| (lo.min(a.position), hi.max(a.position)),
            ),
            LevyMeasure::TwoSidedExp {
                scale_neg,
                scale_pos,
                ..
            } => (
                if *scale_neg > 0.0 { f64::NEG_INFINITY } else { 0.0 },
                if *scale_pos > 0.0 { f64::INFINITY } else { 0.0 },
            ),
            LevyMeasure::CompoundPoissonExp { .. } | LevyMeasure::MlSubordinator { .. } => {
                (0.0, f64::INFINITY)
            }
            LevyMeasure::Sum(parts) => parts.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), p| {
                    let (a, b) = p.support();
                    (lo.min(a), hi.max(b))
                },
            ),
            LevyMeasure::Image(inner, map) => {
                let (ilo, ihi) = inner.support();
                let a = map.apply_ext(ihi);
                let b = map.apply_ext(ilo);
                (a.min(b), a.max(b))
            }
        }
    }

    /// `∫ min(1, x²) ν(dx)`, the defining integrability requirement.
    pub fn min1_x2(&self, tol: Tol) -> Result<f64> {
        let w = |x: f64| {
            let a = x.abs().min(1.0);
            a * a
        };
        Ok(self.integrate(&w, Iv::all(), tol)?.value)
    }

    /// `∫_{|x| <= 1} x ν(dx)` (finite for every member of this family).
    pub fn small_signed_moment(&self, tol: Tol) -> Result<f64> {
        let tight = Tol::new(tol.abs.min(1e-12), tol.rel.min(1e-10));
        Ok(self.integrate(&|x| x, Iv::closed(-1.0, 1.0), tight)?.value)
    }

    /// `∫_{|x| <= 1} |x| ν(dx)`.
    pub fn small_abs_moment(&self, tol: Tol) -> Result<f64> {
        Ok(self.integrate(&|x| x.abs(), Iv::closed(-1.0, 1.0), tol)?.value)
    }

    /// Whether `∫_{|x|>1} |x| ν(dx) < ∞`.
    pub fn abs_tail_moment_finite(&self, power: i32) -> bool {
        match self {
            LevyMeasure::Zero | LevyMeasure::Atoms(_) => true,
            LevyMeasure::TwoSidedExp { .. } => true,
            LevyMeasure::CompoundPoissonExp { .. } => true,
            LevyMeasure::MlSubordinator { .. } => true,
            LevyMeasure::Sum(parts) => parts.iter().all(|p| p.abs_tail_moment_finite(power)),
            LevyMeasure::Image(inner, map) => match map {
                // h blows the left tail of the base measure up exponentially:
                // ∫_{y>1} y^p ν_img(dy) = ∫_{x<-ln2} (e^{-x}-1)^p ν(dx).
                JumpMap::ExpM1Neg => inner.exp_neg_tail_beats(power as f64),
                // g is logarithmic; any exponential-tail base measure is fine.
                JumpMap::NegLn1p => true,
            },
        }
    }

    /// Whether `∫_{x < -1} e^{θ |x|} ν(dx) < ∞`.
    fn exp_neg_tail_beats(&self, theta: f64) -> bool {
        match self {
            LevyMeasure::Zero | LevyMeasure::Atoms(_) => true,
            LevyMeasure::TwoSidedExp {
                rate, scale_neg, ..
            } => *scale_neg == 0.0 || *rate > theta,
            LevyMeasure::CompoundPoissonExp { .. } => true,
            LevyMeasure::MlSubordinator { .. } => true,
            LevyMeasure::Sum(parts) => parts.iter().all(|p| p.exp_neg_tail_beats(theta)),
            LevyMeasure::Image(..) => true, // g-images have no heavy left tail
        }
    }

    /// `∫_{|x|>1} x ν(dx)` when finite.
    pub fn tail_signed_moment(&self, tol: Tol) -> Result<Option<f64>> {
        if !self.abs_tail_moment_finite(1) {
            return Ok(None);
        }
        let pos = self.integrate(&|x| x, Iv::above(1.0, false), tol)?;
        let neg = self.integrate(&|x| x, Iv::below(-1.0, false), tol)?;
        Ok(Some(pos.value + neg.value))
    }

    /// `∫ x² ν(dx)` when finite.
    pub fn second_moment(&self, tol: Tol) -> Result<Option<f64>> {
        if !self.abs_tail_moment_finite(2) {
            return Ok(None);
        }
        Ok(Some(self.integrate(&|x| x * x, Iv::all(), tol)?.value))
    }

    /// `∫_{0 < |x| < eps} x ν(dx)`: mean drift of jumps below the cutoff.
    pub fn truncated_mean(&self, eps: f64, tol: Tol) -> Result<f64> {
        Ok(self
            .integrate(&|x| x, Iv::new(-eps, eps, false, false), tol)?
            .value)
    }

    /// `∫_{0 < |x| < eps} x² ν(dx)`: variance rate of jumps below the cutoff.
    pub fn truncated_var(&self, eps: f64, tol: Tol) -> Result<f64> {
        Ok(self
            .integrate(&|x| x * x, Iv::new(-eps, eps, false, false), tol)?
            .value)
    }
}

/// Integrate `integrand` (weight times density) over `iv ∩ (supp_lo, supp_hi)`,
/// choosing finite/semi-infinite quadrature as needed.
fn density_integral<F: Fn(f64) -> f64>(
    integrand: &F,
    iv: Iv,
    supp_lo: f64,
    supp_hi: f64,
    tol: Tol,
) -> Result<Quad> {
    let lo = iv.lo.max(supp_lo);
    let hi = iv.hi.min(supp_hi);
    if lo >= hi {
        return Ok(Quad::zero());
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => quad::quad(integrand, lo, hi, tol),
        (true, false) => {
            // split off [lo, lo+1] so endpoint singularities stay separate
            let mid = lo + 1.0;
            let head = quad::quad(integrand, lo, mid, tol)?;
            let tail = quad::quad_semi_inf(integrand, mid, tol)?;
            Ok(head.add(tail))
        }
        (false, true) => {
            let mid = hi - 1.0;
            let tail = quad::quad_neg_inf(integrand, mid, tol)?;
            let head = quad::quad(integrand, mid, hi, tol)?;
            Ok(head.add(tail))
        }
        (false, false) => {
            let neg = quad::quad_neg_inf(integrand, 0.0, tol)?;
            let pos = quad::quad_semi_inf(integrand, 0.0, tol)?;
            Ok(neg.add(pos))
        }
    }
}

/// Density of the Mittag-Leffler subordinator measure.
pub fn ml_nu_density(x: f64, alpha: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let g = special::gamma_fn(1.0 - alpha);
    let e = (-x / alpha).exp();
    let base = -(-x / alpha).exp_m1(); // 1 - e^{-x/alpha}, stable near 0
    e / (g * base.powf(alpha + 1.0))
}

/// Closed-form tail `ν((x, ∞))` of the Mittag-Leffler subordinator measure.
pub fn ml_nu_tail(x: f64, alpha: f64) -> f64 {
    let g = special::gamma_fn(1.0 - alpha);
    let base = -(-x / alpha).exp_m1();
    (base.powf(-alpha) - 1.0) / g
}

/// Inverse of the tail: the jump size with `ν((x,∞)) = t`.
pub fn ml_nu_tail_inverse(t: f64, alpha: f64) -> f64 {
    let g = special::gamma_fn(1.0 - alpha);
    let b = (g * t + 1.0).powf(-1.0 / alpha);
    -alpha * (-b).ln_1p() // = -alpha * ln(1 - b)
}

/// One arrival stream of a jump simulation.
#[derive(Clone, Debug)]
pub struct JumpSource {
    pub rate: f64,
    pub kind: SourceKind,
}

#[derive(Clone, Debug)]
pub enum SourceKind {
    Fixed(f64),
    /// `sign * Exp(rate)` jump sizes.
    ExpJump { rate: f64, sign: f64 },
    /// Jumps of the Mittag-Leffler subordinator measure above `cutoff`,
    /// drawn by exact inversion of the closed-form tail.
    MlTail { alpha: f64, cutoff: f64 },
    Mapped(Box<SourceKind>, JumpMap),
}

impl SourceKind {
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            SourceKind::Fixed(x) => *x,
            SourceKind::ExpJump { rate, sign } => sign * rng.exponential(*rate),
            SourceKind::MlTail { alpha, cutoff } => {
                let t = rng.uniform() * ml_nu_tail(*cutoff, *alpha);
                ml_nu_tail_inverse(t, *alpha)
            }
            SourceKind::Mapped(inner, map) => map.apply(inner.sample(rng)),
        }
    }
}

/// Decomposition of a measure into exact jump sources plus the mean/variance
/// rates of the dropped sub-`eps` part (nonzero only for infinite-activity
/// components; finite-activity components are sampled exactly).
pub struct JumpPlan {
    pub sources: Vec<JumpSource>,
    pub small_mean: f64,
    pub small_var: f64,
}

impl LevyMeasure {
    pub fn jump_plan(&self, eps: f64, tol: Tol) -> Result<JumpPlan> {
        let mut plan = JumpPlan {
            sources: vec![],
            small_mean: 0.0,
            small_var: 0.0,
        };
        self.collect_sources(eps, tol, None, &mut plan)?;
        Ok(plan)
    }

    fn collect_sources(
        &self,
        eps: f64,
        tol: Tol,
        wrap: Option<JumpMap>,
        plan: &mut JumpPlan,
    ) -> Result<()> {
        let push = |kind: SourceKind, rate: f64, plan: &mut JumpPlan| {
            if rate > 0.0 {
                let kind = match wrap {
                    Some(m) => SourceKind::Mapped(Box::new(kind), m),
                    None => kind,
                };
                plan.sources.push(JumpSource { rate, kind });
            }
        };
        match self {
            LevyMeasure::Zero => {}
            LevyMeasure::Atoms(atoms) => {
                for a in atoms {
                    push(SourceKind::Fixed(a.position), a.mass, plan);
                }
            }
            LevyMeasure::TwoSidedExp {
                rate,
                scale_neg,
                scale_pos,
            } => {
                push(
                    SourceKind::ExpJump {
                        rate: *rate,
                        sign: 1.0,
                    },
                    scale_pos / rate,
                    plan,
                );
                push(
                    SourceKind::ExpJump {
                        rate: *rate,
                        sign: -1.0,
                    },
                    scale_neg / rate,
                    plan,
                );
            }
            LevyMeasure::CompoundPoissonExp {
                intensity,
                jump_rate,
            } => {
                push(
                    SourceKind::ExpJump {
                        rate: *jump_rate,
                        sign: 1.0,
                    },
                    *intensity,
                    plan,
                );
            }
            LevyMeasure::MlSubordinator { alpha } => {
                // Cutoff in the coordinates of this measure; when the plan is
                // for the image measure, `eps` bounds the image jump size.
                let cutoff = match wrap {
                    None => eps,
                    Some(JumpMap::ExpM1Neg) => {
                        if eps >= 1.0 {
                            return Err(KefError::config(
                                "small-jump cutoff must be < 1 for image measures",
                            ));
                        }
                        // |h(x)| < eps on (0, -ln(1-eps))
                        -(-eps).ln_1p()
                    }
                    Some(JumpMap::NegLn1p) => (-eps).exp_m1().abs().max(f64::MIN_POSITIVE),
                };
                if !(cutoff > 0.0) {
                    return Err(KefError::config(
                        "infinite-activity measure requires a positive small-jump cutoff",
                    ));
                }
                push(
                    SourceKind::MlTail {
                        alpha: *alpha,
                        cutoff,
                    },
                    ml_nu_tail(cutoff, *alpha),
                    plan,
                );
                let small = Iv::new(0.0, cutoff, false, false);
                let (mw, vw): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) = match wrap {
                    None => (Box::new(|x| x), Box::new(|x| x * x)),
                    Some(m) => (
                        Box::new(move |x| m.apply(x)),
                        Box::new(move |x| {
                            let y = m.apply(x);
                            y * y
                        }),
                    ),
                };
                plan.small_mean += self.integrate(&|x| mw(x), small, tol)?.value;
                plan.small_var += self.integrate(&|x| vw(x), small, tol)?.value;
            }
            LevyMeasure::Sum(parts) => {
                for p in parts {
                    p.collect_sources(eps, tol, wrap, plan)?;
                }
            }
            LevyMeasure::Image(inner, map) => {
                if wrap.is_some() {
                    return Err(KefError::domain("nested image measures are not supported"));
                }
                inner.collect_sources(eps, tol, Some(*map), plan)?;
            }
        }
        Ok(())
    }
}
