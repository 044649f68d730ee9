//! Hessian of the squared loss for the two-layer ReLU model.
//!
//! H = (1/n)Σ_i ∇f_i∇f_iᵀ + (1/n)Σ_i r_i∇²f_i, where ∇²f_i has only the cross
//! blocks ∂²f/∂v_k∂w_k = 1{z_ik>0}x_i and ∂²f/∂v_k∂b_k = −1{z_ik>0}.

mod operator;

pub use operator::{dense_hessian, dense_hessian_capped, hvp, tangent_features, HessianOperator, Hvp};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::model::Network;
use crate::numerics::{power_iteration, SeedSpec};
use crate::train::CurvatureProbe;
use crate::Result;

/// Pre-activations with |z| below this make the loss non-twice-differentiable there.
pub const KINK_TOL: f64 = 1e-9;
/// Largest parameter count for which the explicit Hessian is assembled.
pub const DENSE_CAP: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PowerHvp,
    Dense,
    TangentFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub lambda_max: f64,
    pub iterations: usize,
    pub method: Method,
    pub converged: bool,
    /// True when a second, shifted pass was needed because the dominant
    /// eigenvalue was negative.
    pub shifted: bool,
    pub kink_count: usize,
    pub two_over_eta: Option<f64>,
    pub beos: Option<bool>,
}

impl CurvatureReport {
    /// Attach the 2/η reference and the BEoS flag.
    pub fn with_eta(mut self, eta: f64) -> Self {
        let r = 2.0 / eta;
        self.two_over_eta = Some(r);
        self.beos = Some(self.lambda_max <= r);
        self
    }
}

/// Top (signed) Hessian eigenvalue by power iteration on Hessian-vector products.
///
/// The first pass finds the eigenvalue of largest magnitude, μ. If μ ≥ 0 it is
/// λ_max. Otherwise H − μI is positive semidefinite and a second pass on it gives
/// λ_max − μ.
pub fn lambda_max(net: &Network, data: &Dataset, tol: f64, max_iter: usize, seed: SeedSpec) -> Result<CurvatureReport> {
    let op = HessianOperator::new(net, data)?;
    let p = op.dim();
    let first = power_iteration(|x, out| op.apply(x, out), p, tol, max_iter, seed)?;
    if first.eigenvalue >= 0.0 {
        return Ok(CurvatureReport {
            lambda_max: first.eigenvalue,
            iterations: first.iterations,
            method: Method::PowerHvp,
            converged: first.converged,
            shifted: false,
            kink_count: op.kink_count(),
            two_over_eta: None,
            beos: None,
        });
    }
    let shift = -first.eigenvalue;
    let second = power_iteration(
        |x, out| {
            op.apply(x, out);
            out.iter_mut().zip(x).for_each(|(o, xi)| *o += shift * xi);
        },
        p,
        tol,
        max_iter,
        seed.child(2),
    )?;
    Ok(CurvatureReport {
        lambda_max: second.eigenvalue - shift,
        iterations: first.iterations + second.iterations,
        method: Method::PowerHvp,
        converged: first.converged && second.converged,
        shifted: true,
        kink_count: op.kink_count(),
        two_over_eta: None,
        beos: None,
    })
}

/// λ_max probe for training runs.
#[derive(Debug, Clone, Copy)]
pub struct PowerProbe {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: SeedSpec,
}

impl Default for PowerProbe {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: SeedSpec::new(0x5eed, 0),
        }
    }
}

impl CurvatureProbe for PowerProbe {
    fn lambda_max(&self, net: &Network, data: &Dataset) -> Result<f64> {
        Ok(lambda_max(net, data, self.tol, self.max_iter, self.seed)?.lambda_max)
    }
}
