//! Numerical laboratory for the obstacle problem and the analysis of its
//! singular free-boundary points.

pub mod blowup;
pub mod dimension;
pub mod error;
pub mod expr;
pub mod field;
pub mod functionals;
pub mod poly;
pub mod signorini;
pub mod vi_solver;

pub use error::{Error, Result};
