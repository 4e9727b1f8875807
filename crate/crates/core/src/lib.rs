//! Spectral-gap obstructions to low-dimensional metric embeddings, measured
//! numerically.

// `!(x >= lo)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod embeddings;
pub mod error;
pub mod graphs;
pub mod harness;
pub mod io;
pub mod limits;
pub mod metrics;
pub mod norms;
pub mod optim;
pub mod poincare;
pub mod spectral;

pub use error::{Error, Result};
