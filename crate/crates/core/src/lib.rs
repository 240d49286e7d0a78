//! Finite-volume schemes for the fractional heat and Lévy-Fokker-Planck
//! equations on bounded domains with no-flux boundaries.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod convolution;
pub mod error;
pub mod evolve;
pub mod kernels;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod reference;
pub mod scheme1d;
pub mod scheme2d;

pub use error::{Error, Result};
pub use mesh::{build_grid_1d, build_grid_2d, init_field, Datum, Field, Field1D, Field2D, Grid, Grid1D, Grid2D};
