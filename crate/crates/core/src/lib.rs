//! Numerical laboratory for Bergman kernels, Bergman metric geometry and
//! Hankel/multiplication operators on bounded model domains in C^d.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximation;
pub mod diagnostics;
pub mod domains;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kernel;
mod linalg;
pub mod operators;

pub use error::{Error, Result};
pub use num_complex::Complex64;
