//! Angular-momentum algebra for a spin-I nucleus and its optical dipole couplings.
//!
//! Basis order is descending magnetic quantum number everywhere: index 0 is
//! `m = +I`, index `d-1` is `m = -I`. Clebsch–Gordan phases follow the
//! Condon–Shortley convention.

mod dipole;
mod halfint;
mod operators;
mod wigner;

pub use dipole::{allowed_excited_spins, dipole_coupling, reduced_line_factor, DipoleCoupling};
pub use halfint::HalfInt;
pub use operators::{spin_operators, SpinSystem};
pub use wigner::{clebsch_gordan, wigner_3j, wigner_6j};
