//! Cartoon + texture + pseudo-edge image decomposition.
//!
//! An image `f` is split into a piecewise-smooth cartoon `u`, an oscillatory
//! texture `v` and a non-negative pseudo-edge field `w`. The cartoon solves a
//! TV problem whose weight `g(w)` is driven by a linear inhomogeneous
//! diffusion equation for `w`; the texture is a soft-thresholded residual with
//! an optionally image-adaptive fidelity `mu`.
//!
//! Intensities are on the unit scale `[0, 1]`.

pub mod baseline;
pub mod color;
pub mod diffusion;
pub mod error;
pub mod fidelity;
pub mod grid;
pub mod metrics;
pub mod multiscale;
pub mod noise;
mod par;
pub mod synthetic;
pub mod tv_dual;
pub mod visualize;

#[cfg(feature = "io")]
pub mod io;
#[cfg(feature = "io")]
pub mod report;

pub use error::{Error, Result};
pub use grid::{ScalarField, VectorField};
pub use tv_dual::{decompose, DecompositionResult, GChoice, LambdaMode, MuMode, SolverConfig};
