//! Pseudospectral solver and measurement laboratory for the analyticity
//! radius of scale-invariant semi-linear parabolic systems
//! `d_t U - Lap U = P(U)` on a periodic box, truncated to a Fourier ball.

pub mod analyticity;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod models;
pub mod norms;
pub mod spectral;

pub use error::{Error, Result};
