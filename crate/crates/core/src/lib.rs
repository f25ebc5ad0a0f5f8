//! Numerical second-derivative supersymmetry for generalized Swanson models.

pub mod error;
pub mod expr;
pub mod grid;
pub mod models;
pub mod operators;
pub mod pseudo;
pub mod spectral;
pub mod ssusy;
pub mod swanson;

pub use error::{Error, Result};
