//! Traffic rate network tomography by higher-order cumulant matching.
//!
//! Source–destination flows are modelled as independent Poisson counts
//! `X`, observed only through link counts `Y = A X` for a binary routing
//! matrix `A`. Every cumulant of a Poisson variable equals its rate, so the
//! link cumulants of order `k` are linear in the rate vector through the
//! `k`-fold Khatri-Rao power of `A`. Stacking orders `1..=r`, removing
//! null and duplicated rows, and matching against unbiased K-statistics
//! of the link samples gives a linear inverse problem that is solved with
//! either the multiplicative I-divergence iteration or Tikhonov-regularized
//! least squares.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the
//! experiment harness and the command line live in the `tomocume` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod cumulants;
mod error;
pub mod linalg;
pub mod matrix;
pub mod simulate;
pub mod solvers;
pub mod supernet;
pub mod system;
pub mod tensor;
pub mod topology;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
