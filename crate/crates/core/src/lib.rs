//! Numerical laboratory for fronts of periodic reaction-diffusion-advection
//! equations `u_t = div(A(x) grad u) + q(x) . grad u + f(x, u)`.

pub mod eigen;
pub mod error;
pub mod fronts;
pub mod grid;
pub mod harness;
pub mod levelsets;
pub mod medium;
pub mod omega;
pub mod par;
pub mod solver;
pub mod wulff;

pub use error::{Error, Result};
