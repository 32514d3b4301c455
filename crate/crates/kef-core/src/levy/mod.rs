//! Lévy processes as characteristic triplets over a closed measure family,
//! with the transformation algebra linking `ξ`, `U` and the killed `Ũ`.

mod json;
mod measure;
mod triplet;

pub use json::{GammaDto, NuComponentDto, ProcessSpecDto};
pub use measure::{
    ml_nu_density, ml_nu_tail, ml_nu_tail_inverse, Atom, Iv, JumpMap, JumpPlan, JumpSource,
    LevyMeasure, SourceKind,
};
pub use triplet::{
    kill, q0_sufficient_convergence, second_moment_condition, structural_tag, u_to_xi, xi_to_u,
    LevyTriplet, ProcessSpec, Role, StructuralTag,
};
