//! Periodic fields on the torus, their Fourier transforms, multipliers,
//! mollifiers and Sobolev/Lipschitz norms.

mod grid;
mod multiplier;
mod norms;
mod sampling;
mod snapshot;

pub use grid::{forward_transform, inverse_transform, GridFunction, TorusGrid};
pub use multiplier::{apply_multiplier, cutoff_profile, mollify, MultiplierSymbol};
pub use norms::{
    dealias, derivative, fractional_h1_norm, lipschitz_norm, product, sobolev_inner, sobolev_norm_sq,
};
pub use sampling::random_band_limited;
pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_MAGIC};
