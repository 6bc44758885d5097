//! Desk-scale numerical laboratory for Weyl laws of Schrodinger operators
//! `hbar^2 Delta + V` on `R^n`: Stieltjes measures and fractional averages,
//! potentials and their sublevel volumes, finite-difference spectra, and
//! reports comparing each asymptotic statement with its measured ratio.

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod discretization;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod grids;
pub mod mc;
pub mod measures;
pub mod potentials;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use measures::{staircase_nu, FractionalIndex, StieltjesMeasure};
