//! JSON schema for process specifications, consumed by the CLI.
//!
//! ```json
//! {
//!   "sigma2": 4.0,
//!   "gamma": 0.0,                      // or {"drift0": 1.0}
//!   "nu": [
//!     {"kind": "atom", "position": 1.0, "mass": 0.5},
//!     {"kind": "two_sided_exp", "rate": 1.0, "scale_pos": 1.0, "scale_neg": 1.0},
//!     {"kind": "cp_exp", "intensity": 2.0, "jump_rate": 1.0},
//!     {"kind": "ml_subordinator", "alpha": 0.5}
//!   ]
//! }
//! ```

use super::measure::LevyMeasure;
use super::triplet::LevyTriplet;
use crate::error::Result;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NuComponentDto {
    Atom { position: f64, mass: f64 },
    TwoSidedExp {
        rate: f64,
        #[serde(default)]
        scale_pos: f64,
        #[serde(default)]
        scale_neg: f64,
    },
    CpExp { intensity: f64, jump_rate: f64 },
    MlSubordinator { alpha: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaDto {
    Location(f64),
    Drift { drift0: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProcessSpecDto {
    #[serde(default)]
    pub sigma2: f64,
    pub gamma: GammaDto,
    #[serde(default)]
    pub nu: Vec<NuComponentDto>,
}

impl ProcessSpecDto {
    pub fn to_triplet(&self) -> Result<LevyTriplet> {
        let mut atoms = Vec::new();
        let mut parts: Vec<LevyMeasure> = Vec::new();
        for c in &self.nu {
            match *c {
                NuComponentDto::Atom { position, mass } => {
                    atoms.push((position, mass));
                }
                NuComponentDto::TwoSidedExp {
                    rate,
                    scale_pos,
                    scale_neg,
                } => parts.push(LevyMeasure::TwoSidedExp {
                    rate,
                    scale_neg,
                    scale_pos,
                }),
                NuComponentDto::CpExp {
                    intensity,
                    jump_rate,
                } => parts.push(LevyMeasure::CompoundPoissonExp {
                    intensity,
                    jump_rate,
                }),
                NuComponentDto::MlSubordinator { alpha } => {
                    parts.push(LevyMeasure::MlSubordinator { alpha })
                }
            }
        }
        if !atoms.is_empty() {
            parts.push(LevyMeasure::atoms(atoms));
        }
        let nu = match parts.len() {
            0 => LevyMeasure::Zero,
            1 => parts.pop().unwrap(),
            _ => LevyMeasure::Sum(parts),
        };
        match self.gamma {
            GammaDto::Location(g) => LevyTriplet::new(self.sigma2, nu, g),
            GammaDto::Drift { drift0 } => LevyTriplet::from_drift(self.sigma2, nu, drift0),
        }
    }
}
