//! Shared fixtures for the benchmark targets.

use kef_core::levy::{LevyTriplet, ProcessSpec, Role};
use kef_core::sim::{Horizon, SimConfig, SmallJumpMode};

pub fn two_brownian_pair() -> (ProcessSpec, ProcessSpec) {
    (
        ProcessSpec::new(LevyTriplet::brownian(4.0, 0.0), Role::Xi),
        ProcessSpec::new(LevyTriplet::deterministic(1.0), Role::Eta),
    )
}

pub fn poisson_bm_pair() -> (ProcessSpec, ProcessSpec) {
    (
        ProcessSpec::new(LevyTriplet::poisson(1.0).unwrap(), Role::Xi),
        ProcessSpec::new(LevyTriplet::brownian(1.0, 0.0), Role::Eta),
    )
}

pub fn bench_config() -> SimConfig {
    SimConfig {
        step: 1e-3,
        eps: 1e-4,
        horizon: Horizon::Killed,
        small_jump_mode: SmallJumpMode::DropCompensate,
        master_seed: 42,
        assume_convergence: false,
    }
}
