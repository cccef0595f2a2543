//! Optimal control toolkit for a nuclear-spin qudit driven by a phase-modulated
//! rf field and a tensor light shift.
//!
//! The crate is organised bottom-up:
//!
//! - [`spin`]: angular-momentum algebra (spin matrices, Wigner symbols, dipole couplings).
//! - [`atom`]: the Sr-87 light-shift / optical-pumping model and figure of merit.
//! - [`dynamics`]: control Hamiltonian, unitary and Lindblad propagation, fidelities.
//! - [`optimizer`]: GRAPE with exact gradients, slew projection, robust objective, Haar targets.
//! - [`waveform`]: low-pass filter model and waveform file formats.
//! - [`harness`]: experiment configs, sweeps and CSV/JSON emission used by the `qdc` CLI.
//!
//! Inside the solver all frequencies are in units of the rf Rabi frequency and
//! times in units of its inverse; physical units only appear at the harness boundary.

pub mod atom;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod optimizer;
pub mod spin;
pub mod waveform;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
