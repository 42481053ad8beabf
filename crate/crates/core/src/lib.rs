//! Numerical laboratory for multi-parameter projection theorems on
//! discretized fractal sets.
//!
//! Sets live on uniform grids ([`grid::GridSet`]) and carry probability
//! weights ([`grid::WeightedMeasure`]). On top of these the crate builds
//! sumsets and dilated sums ([`arithmetic`]), Fourier transforms and energy
//! integrals ([`spectral`]), projection pushforwards and tube masses
//! ([`projection`]), dimension estimates and the sufficiency-condition
//! algebra ([`dimension`]), simplex spectra ([`configurations`]) and the
//! seeded sweep harness ([`harness`]).

pub mod error;
pub mod fit;
pub mod grid;
pub mod numeric;
pub mod arithmetic;
pub mod directions;
pub mod spectral;
pub mod projection;
pub mod dimension;
pub mod configurations;
pub mod seed;
pub mod io;
pub mod harness;
mod bitset;

pub use error::{Error, Result};
