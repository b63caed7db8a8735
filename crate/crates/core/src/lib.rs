//! Finite-volume laboratory for Lieb–Robinson bounds, ground-state projector
//! factorization, and entanglement area laws on exactly diagonalizable spin
//! chains.

extern crate blas_src;

pub mod entropy;
pub mod error;
pub mod geometry;
pub mod hastings;
pub mod linalg;
pub mod lrbound;
pub mod model;
pub mod opspace;
pub mod spectral;

pub use error::{Error, Result};
