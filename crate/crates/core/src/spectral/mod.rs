//! Discrete Fourier representation of fields on the periodic box.
//!
//! Normalization: `coeff(xi) = points^-d * sum_x u(x) exp(-i xi.x)`, so the
//! coefficients are the Fourier coefficients of the field and
//! `mean(|u|^2) = sum |coeff|^2` (Parseval, no stray `2 pi` factors).

mod field;
mod grid;
mod product;
mod shells;
mod transform;

pub use field::{ball_symbol, gevrey_symbol, heat_symbol, SpectralField};
pub use grid::{make_grid, Grid, GridParams};
pub use product::{dealiased_product, PaddedSpace};
pub use shells::{shell_decompose, shell_map, ShellMap, ShellPolicy, ShellSpectrum};
pub use transform::{forward_transform, inverse_transform, node_position};
