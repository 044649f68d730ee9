//! Data geometry and the implicit regularization of gradient descent below the
//! edge of stability, for two-layer ReLU networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: seeded RNG streams, small dense kernels, power iteration and
//!   log-log least squares.
//! - [`data`]: feature samplers (Beta-radial, mixtures of low-dimensional balls,
//!   sphere, ball, Gaussian), teachers and CSV ingestion.
//! - [`model`]: the two-layer ReLU network, its loss, gradient and checkpoints.
//! - [`train`]: full-batch gradient descent with clipping and trajectory logging.
//! - [`curvature`]: Hessian-vector products, dense Hessians, tangent features and
//!   top-eigenvalue estimation.
//! - [`weightfn`]: the data-dependent weight function `g`, the weighted path norm
//!   and the diagnostics built on it.
//! - [`flatnet`]: the flat interpolating network for data on the unit sphere.
//! - [`shatter`]: cap packings, localized ReLU atoms and the empty-cap machinery.
//! - [`depth`]: approximate Tukey depth.
//! - [`harness`]: experiment recipes, persistence and plot emission behind the CLI.

pub mod curvature;
pub mod data;
pub mod depth;
mod error;
pub mod flatnet;
pub mod harness;
pub mod model;
pub mod numerics;
mod par;
pub mod shatter;
pub mod train;
pub mod weightfn;

pub use error::{Error, Result};
