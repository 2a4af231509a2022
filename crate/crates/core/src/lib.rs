//! Determinantal spanning-forest measures on ℤ- and ℤ²-periodic weighted graphs.
//!
//! The crate is organised bottom-up:
//!
//! * [`laurent`] — one- and two-variable Laurent polynomials, DFT interpolation,
//!   Newton polygons and the `(2 − X − 1/X)^k` basis change.
//! * [`graph`] — periodic graphs, finite covers, width, electrical moves.
//! * [`laplacian`] — bundle Laplacians, characteristic polynomials and the
//!   brute-force forest enumeration used as an oracle.
//! * [`spectral`] — roots and growth rates of strip polynomials, Ronkin
//!   function, surface tension, Harnack checks, the special divisor and decay fits.
//! * [`kernel`] — transfer currents and contour-integral kernels.
//! * [`sampling`] — exact DPP sampling, Wilson's algorithm and a fixed-homology MCMC.
//! * [`limitshape`] — the discrete surface-tension minimisation over height functions.

pub mod error;
pub mod graph;
pub mod kernel;
pub mod laplacian;
pub mod laurent;
pub mod limitshape;
pub mod numerics;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
