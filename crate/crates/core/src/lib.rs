#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distortion;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod par;
pub mod potential;
pub mod problems;
pub mod rng;
pub mod scalar;
pub mod solvers;
pub mod xi;

pub use error::{Error, Result};
pub use geometry::{Manifold, Point, TangentVector};
