//! Time-dependent Poisson random field model for polymorphism within and
//! divergence between two species.
//!
//! The crate is organised bottom-up: [`moran`] holds exact finite-population
//! computations, [`diffusion`] the limiting diffusion, [`prf`] and
//! [`sampling`] the population and sample mean measures, [`inference`] the
//! Poisson likelihood and its maximisation, and [`ingest`] the conversion of
//! coding alignments into count tables.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod error;
pub mod grid;
pub mod inference;
pub mod ingest;
pub mod measure;
pub mod moran;
pub mod params;
pub mod prf;
pub mod quadrature;
pub mod sampling;
pub mod special;
pub mod table;

pub use error::{PrfError, Result};
pub use grid::{Grid, GridConfig, GridFn};
pub use inference::{fit_mle, profile_ci, FitConfig, FitResult};
pub use measure::InitialMeasure;
pub use params::{scale_map, FiniteParams, ScaledParams};
pub use table::{CountTable, Layout};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
