//! Time evolution, measurement interactions, residual diagnostics and the
//! stationary-state solver.

mod evolve;
mod measurement;
mod residuals;
mod stationary;
pub mod tridiag;

pub use evolve::{evolve, evolve_two_dof, EvolutionConfig, EvolutionTrace, QRefresh, Scheme, INPUT_NORM_TOL};
pub use measurement::{
    pointer_density, pointer_final_state, stern_gerlach_evolve, PointerBranch, PointerCoupling, PointerOutcome,
    PointerPacket, SternGerlachConfig, SternGerlachOutcome,
};
pub use residuals::{hj_continuity_residuals, Residuals, RESIDUAL_MASK};
pub use stationary::{stationary_solve, StationaryConfig, StationaryState};
