//! Exact planar solution of the quartic matrix model in the continuum of matrix indices.
//!
//! Units: μ = 1 throughout.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlators;
pub mod error;
pub mod grid;
pub mod hilbert;
pub mod perturbation;
pub mod schwinger;
pub mod snapshot;
pub mod solver;
pub mod special;
pub mod stieltjes;
pub mod sweep;
pub mod twopoint;

pub use error::{Error, Result};
pub use grid::{build_grid, GeometricGrid, Interp, Sampled1D};
pub use snapshot::{load_solution, save_solution};
pub use solver::{apply_T, solve_boundary, BoundarySolution, ModelParams, Workspace};
