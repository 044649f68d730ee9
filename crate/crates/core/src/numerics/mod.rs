//! Shared numerical utilities.
//!
//! Everything here is deterministic given its inputs; randomness enters only
//! through a [`SeedSpec`].

mod linalg;
mod ols;
mod power;
mod rng;

pub use linalg::{dot, gram_schmidt, norm, normalize, standard_normal_vec, uniform_in_ball, unit_vector};
pub use ols::{ols, ols_loglog, SlopeFit};
pub use power::{power_iteration, PowerIteration, STALL_THRESHOLD};
pub use rng::{splitmix64, SeedSpec, StreamRng};
