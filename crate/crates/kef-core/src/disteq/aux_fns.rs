//! Tail and integrated-tail functions of the jump measures of `η` and `Ũ`
//! entering the measure-level distributional equations, with the
//! finite-variation and finite-first-moment variants.

use crate::error::{KefError, Result};
use crate::levy::{Iv, LevyTriplet};
use crate::quad::Tol;

/// Bundle of the auxiliary functions for a given `(η, Ũ)` pair.
///
/// `b_*` are signed tail functions (bounded), `s_*` integrated small-jump
/// tails (nonnegative, integrable). The `*_fv` variants use untruncated
/// tails and require finite-variation jumps; the `*_fm` variants integrate
/// full tails and require finite first moments.
pub struct AuxFunctions {
    pub eta: LevyTriplet,
    pub util: LevyTriplet,
    tol: Tol,
}

pub fn build_aux(eta: &LevyTriplet, util: &LevyTriplet) -> Result<AuxFunctions> {
    eta.nu.validate()?;
    util.nu.validate()?;
    Ok(AuxFunctions {
        eta: eta.clone(),
        util: util.clone(),
        tol: Tol::default(),
    })
}

impl AuxFunctions {
    /// `B_η(z)`: `-ν_η((-∞, min(z,-1)))` for z<0, `ν_η((max(z,1), ∞))` for z>0.
    pub fn b_eta(&self, z: f64) -> f64 {
        if z == 0.0 {
            0.0
        } else if z > 0.0 {
            self.eta.nu.mass_above(z.max(1.0), true)
        } else {
            -self.eta.nu.mass_below(z.min(-1.0), true)
        }
    }

    /// `B_Ũ(z)` on `[1, ∞)`: `ν_Ũ((max(z-1,1), ∞))` for z>1, 0 at z=1.
    pub fn b_util(&self, z: f64) -> Result<f64> {
        if z < 1.0 {
            return Err(KefError::domain("b_util is defined on [1, inf)"));
        }
        if z == 1.0 {
            return Ok(0.0);
        }
        Ok(self.util.nu.mass_above((z - 1.0).max(1.0), true))
    }

    /// `S_η(z)`: integrated tails of `ν_η` restricted to `[-1,1]`.
    pub fn s_eta(&self, z: f64) -> Result<f64> {
        if z == 0.0 {
            return Ok(0.0);
        }
        let v = if z > 0.0 {
            if z > 1.0 {
                return Ok(0.0);
            }
            self.eta
                .nu
                .integrate(&|y| y - z, Iv::closed(z, 1.0), self.tol)?
        } else {
            if z < -1.0 {
                return Ok(0.0);
            }
            self.eta
                .nu
                .integrate(&|y| z - y, Iv::closed(-1.0, z), self.tol)?
        };
        Ok(v.value)
    }

    /// `S_Ũ(z)` on `[0, ∞)`, with the kink at z = 1.
    pub fn s_util(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(KefError::domain("s_util is defined on [0, inf)"));
        }
        if z == 1.0 {
            return Ok(0.0);
        }
        let v = if z < 1.0 {
            // ∫_{[-1, z-1]} (z-1-y) ν_Ũ(dy); includes the killing atom at -1
            self.util
                .nu
                .integrate(&|y| z - 1.0 - y, Iv::closed(-1.0, z - 1.0), self.tol)?
        } else {
            self.util
                .nu
                .integrate(&|y| y - z + 1.0, Iv::closed(z - 1.0, 1.0), self.tol)?
        };
        Ok(v.value)
    }

    fn require_fv_jumps(t: &LevyTriplet, who: &str) -> Result<()> {
        // every measure in the supported family has finite-variation jumps;
        // the gate still guards the drift being available
        if t.gamma0.is_none() {
            return Err(KefError::domain(format!(
                "{who}: finite-variation variant requested for an infinite-variation jump part"
            )));
        }
        Ok(())
    }

    /// `B_η^FV(z)`: untruncated signed tails, finite-variation jumps required.
    pub fn b_eta_fv(&self, z: f64) -> Result<f64> {
        Self::require_fv_jumps(&self.eta, "b_eta_fv")?;
        Ok(if z == 0.0 {
            0.0
        } else if z > 0.0 {
            self.eta.nu.mass_above(z, true)
        } else {
            -self.eta.nu.mass_below(z, true)
        })
    }

    /// `B_Ũ^FV(z)` on `[0, ∞)`: `-ν_Ũ((-∞, z-1))` for z in [0,1),
    /// `ν_Ũ((z-1, ∞))` for z > 1, 0 at z = 1.
    pub fn b_util_fv(&self, z: f64) -> Result<f64> {
        Self::require_fv_jumps(&self.util, "b_util_fv")?;
        if !(z >= 0.0) {
            return Err(KefError::domain("b_util_fv is defined on [0, inf)"));
        }
        Ok(if z == 1.0 {
            0.0
        } else if z < 1.0 {
            -self.util.nu.mass_below(z - 1.0, true)
        } else {
            self.util.nu.mass_above(z - 1.0, true)
        })
    }

    /// `S_η^FM(z)`: integrated full tails; finite first moment required.
    pub fn s_eta_fm(&self, z: f64) -> Result<f64> {
        if !self.eta.nu.abs_tail_moment_finite(1) {
            return Err(KefError::domain("s_eta_fm requires E|η₁| < ∞"));
        }
        if z == 0.0 {
            return Ok(0.0);
        }
        let v = if z > 0.0 {
            self.eta
                .nu
                .integrate(&|y| y - z, Iv::above(z, true), self.tol)?
        } else {
            self.eta
                .nu
                .integrate(&|y| z - y, Iv::below(z, true), self.tol)?
        };
        Ok(v.value)
    }

    /// `S_Ũ^FM(z)` on `[0, ∞)`.
    pub fn s_util_fm(&self, z: f64) -> Result<f64> {
        if !self.util.nu.abs_tail_moment_finite(1) {
            return Err(KefError::domain("s_util_fm requires E|Ũ₁| < ∞"));
        }
        if !(z >= 0.0) {
            return Err(KefError::domain("s_util_fm is defined on [0, inf)"));
        }
        if z == 1.0 {
            return Ok(0.0);
        }
        let v = if z < 1.0 {
            self.util
                .nu
                .integrate(&|y| z - 1.0 - y, Iv::below(z - 1.0, true), self.tol)?
        } else {
            self.util
                .nu
                .integrate(&|y| y - z + 1.0, Iv::above(z - 1.0, true), self.tol)?
        };
        Ok(v.value)
    }

    /// Kink abscissae of `S_Ũ`/`B_Ũ^FV` as functions of `w = z/x`:
    /// `w = 1` plus `1 + y` for every structural point `y` of `ν_Ũ`.
    pub fn util_ratio_kinks(&self) -> Vec<f64> {
        let mut ws = vec![1.0, 2.0];
        for y in self.util.nu.breakpoints() {
            let w = 1.0 + y;
            if w > 0.0 && w.is_finite() {
                ws.push(w);
            }
        }
        ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ws.dedup();
        ws
    }

    /// Kink offsets of `S_η`-type convolutions: `±1`, `0` and the structural
    /// points of `ν_η`.
    pub fn eta_conv_kinks(&self) -> Vec<f64> {
        let mut ks = vec![-1.0, 0.0, 1.0];
        ks.extend(self.eta.nu.breakpoints());
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ks.dedup();
        ks
    }
}
