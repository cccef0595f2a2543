//! GRAPE over piecewise-constant phase waveforms.
//!
//! The gradient is exact: each step's derivative comes from the Fréchet
//! derivative of `exp(−iH dt)` in the eigenbasis of `H(c=0)`, phase-conjugated
//! to `c_j`, and is chained through cached forward and backward products.

mod grape;
mod haar;
mod objective;
mod problem;

pub use grape::{grape_optimize, project_slew, GrapeOptions, OptimizationReport, Termination};
pub use haar::{haar_random_state, haar_random_unitary};
pub use objective::Objective;
pub use problem::{exact_gradient, objective, ObjectiveKind, OptimizationProblem, DEFAULT_SLEW_LIMIT};
