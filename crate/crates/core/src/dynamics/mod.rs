//! Time evolution under the phase-modulated control Hamiltonian
//! `H(c) = Ω_rf (cos πc Ix + sin πc Iy) + (β + ε) Iz²`, closed and open.
//!
//! Step `j = 1` acts first: propagators are ordered products `U_n ⋯ U_1`.
//!
//! Every step Hamiltonian is a z-rotation of the `c = 0` one,
//! `H(c) = R(πc) H(0) R(πc)†` with `R(φ) = exp(−iφ Iz)` diagonal, so a single
//! eigendecomposition (closed) or matrix exponential (open) per `(dt, ε)`
//! serves every step; each step is then a diagonal phase conjugation.

mod closed;
mod hamiltonian;
mod open;
mod waveform;

pub use closed::{
    closed_fidelity, propagate_unitary, state_fidelity, step_propagator, unitary_fidelity,
};
pub use hamiltonian::{control_hamiltonian, ControlSystem, StepKernel};
pub use open::{
    choi_matrix, lindbladian, lindbladian_generator, open_fidelity, open_state_fidelity,
    process_fidelity, propagate_cpmap, propagate_cpmap_stepwise, propagate_density, CPMap,
    DensityMatrix, Dissipator,
};
pub use waveform::{TimeUnit, Waveform};

use crate::linalg::{CMat, CVec};

/// What a waveform is meant to achieve.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Map `initial` to `target` (both unit vectors).
    State { initial: CVec, target: CVec },
    /// Implement `target` up to a global phase.
    Unitary { target: CMat },
}

impl Target {
    pub fn dim(&self) -> usize {
        match self {
            Target::State { initial, .. } => initial.len(),
            Target::Unitary { target } => target.nrows(),
        }
    }
}
