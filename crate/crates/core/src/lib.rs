//! Numerical toolkit for weighted forward-curve spaces.
//!
//! * [`curve_space`]: the spaces `H_gamma`, `H0_gamma`, `L2_beta` and `L2_beta (+) R` on a
//!   truncated grid, norms, reflections and the analytic embedding constants.
//! * [`spectral`]: Galerkin discretization of the embedding `H_gamma -> L2_beta (+) R`, its
//!   singular system and finite-rank truncations.
//! * [`fourier_lab`]: continuous Fourier transform on line grids and the identities behind
//!   the compactness argument.
//! * [`hjmm_sim`]: pure-diffusion HJMM dynamics in Musiela parametrization.
//! * [`approx`]: finite-dimensional approximants of simulated paths and error audits.

pub mod approx;
pub mod curve_space;
pub mod error;
pub mod fourier_lab;
pub mod hjmm_sim;
pub mod quad;
pub mod sampling;
pub mod spectral;

pub use error::{FcsError, Result};
