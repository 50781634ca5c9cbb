//! Atom-optics transfer matrices, interference signals and phase uncertainty
//! of a first-order Bragg Mach-Zehnder interferometer.
//!
//! Units: momenta in ħk (q̃ ∈ [-1/2, 1/2]), frequencies in the recoil
//! frequency ω_k, time as λ = ω_k t. The resonant momentum is p₀ = 0.

pub mod error;
pub mod mat2;
pub mod mzi_core;
pub mod optimizer;
pub mod pulse_analytic;
pub mod pulse_numeric;
pub mod sensitivity;
pub mod spin_states;
pub mod units_grid;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
