//! Numerical laboratory for the Hessian geometry of Minkowski norms.
//!
//! The central object is a smooth norm `F` on `R^n` whose energy
//! `E = F^2 / 2` has a positive-definite Hessian away from the origin.
//! That Hessian is a Riemannian metric on the punctured space; this crate
//! computes its fundamental tensor, Cartan tensor and curvature tensor,
//! performs Legendre (gradient) transforms between a norm and its dual,
//! works in spherical coordinates adapted to a block-rotation symmetry,
//! and classifies symmetry-preserving isometries of the Hessian metric
//! into a linear branch and a Legendre branch.

pub mod constructions;
pub mod error;
pub mod isometry;
pub mod jet;
pub mod legendre;
pub mod norms;
pub mod profile;
pub mod tensors;

pub mod acceptance;

pub use error::{Error, Result};
