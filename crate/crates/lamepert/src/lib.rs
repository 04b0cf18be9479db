//! Boundary-integral solver for 2D elastic inclusions and their small
//! interface perturbations.

pub mod emt;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod kernels;
pub mod potentials;
pub mod solver;
pub mod sweep;
pub mod tensors;

pub use error::{Error, Result};
