//! Box grids, sampled fields and sphere/ball quadrature.

mod grid;
pub mod io;
mod quadrature;
mod scalar;

pub use grid::{Grid, GridSpec};
pub use quadrature::{
    ball_integral, gauss_legendre, sphere_integral, unit_ball_volume, unit_sphere_area,
    QuadratureKind, QuadratureRule,
};
pub use scalar::{Evaluable, FnField, ScalarField};
