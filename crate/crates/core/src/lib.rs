//! Brightness of type-0 periodically-poled KTP photon-pair sources projected
//! onto Laguerre-Gaussian signal/idler modes.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and parallel fan-out live in the `lgbright` crate.
//!
//! Layout, bottom-up:
//!
//! * [`dispersion`]: thermo-optic Sellmeier model for n_z of KTP, wave numbers,
//!   phase mismatch, group velocity and its dispersion, phase-matching roots.
//! * [`lgmodes`]: Laguerre polynomials, LG amplitudes and every closed-form
//!   coefficient of the coincidence-amplitude sums.
//! * [`quadrature`]: Gauss-Legendre rules and the adaptive integrators.
//! * [`amplitude`]: coincidence amplitude at four fidelity levels.
//! * [`rates`]: spectra, pair collection rate by two routes, waist surfaces.
//! * [`optimizer`]: focal-parameter ridge/summit search and mode tables.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod amplitude;
pub mod dispersion;
mod error;
mod exec;
pub mod lgmodes;
pub mod optimizer;
pub mod quadrature;
pub mod rates;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub use num_complex::Complex64;
