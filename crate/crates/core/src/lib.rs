//! Harmonic fields on toroidal domains, their Poincaré return maps and the
//! first variation of those maps under boundary deformations.
//!
//! Angles live on `R/Z` (period 1). A boundary is a double Fourier series
//! `E(phi, theta)` sampled on a uniform grid; the harmonic field with unit
//! circulation is restricted to it, normalized to `X = d_phi + X^theta d_theta`
//! and integrated to the return map on the section `phi = 0`.

pub mod axisym;
pub mod cohomology;
pub mod deformation;
pub mod error;
pub mod harmonic;
pub mod jobs;
pub mod neumann;
pub mod ode;
pub mod pipeline;
pub mod poincare;
pub mod reference_field;
pub mod shape_derivative;
pub mod spectral;
pub mod surface;

pub use error::{Error, Result};
