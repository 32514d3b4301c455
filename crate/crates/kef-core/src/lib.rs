//! Simulation and verification toolkit for killed exponential functionals
//! of Lévy processes.
//!
//! A killed exponential functional is the random variable
//! `V = ∫_0^τ exp(-ξ_{s-}) dη_s` built from two independent Lévy processes
//! `ξ` and `η` and an independent Exp(q) killing time `τ` (with `q = 0`
//! read as `τ = ∞`). The crate provides
//!
//! * characteristic-triplet algebra for `ξ`, `η`, the stochastic-exponential
//!   partner `U` (with `E(U) = e^{-ξ}`) and its killed version `Ũ`,
//! * two independent Monte Carlo samplers for `V` plus paths of the
//!   associated generalized Ornstein-Uhlenbeck process,
//! * empirical estimators (ECDF, KS, KDE, empirical characteristic
//!   function) and quadrature against closed-form laws,
//! * residual checkers for the distributional equations satisfied by the
//!   law of `V` (characteristic-function, Laplace, density and
//!   measure-level forms, and the generator pairing), and
//! * a registry of closed-form reference laws and the special functions
//!   they need.

pub mod disteq;
pub mod error;
pub mod est;
pub mod grid;
pub mod laws;
pub mod levy;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod special;

pub use error::{KefError, Result};
pub use est::{ClosedFormLaw, LawRep};
pub use levy::{kill, u_to_xi, xi_to_u, Atom, JumpMap, LevyMeasure, LevyTriplet, ProcessSpec};
pub use sim::{Horizon, SampleBatch, SamplerKind, SimConfig, SmallJumpMode};
