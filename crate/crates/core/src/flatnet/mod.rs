//! Width-≤n interpolating ReLU network on sphere data with a small Hessian.
//!
//! Neuron k sits on sample x_k: w_k = x_k and b_k halfway between ρ_k = max_{i≠k} x_i·x_k
//! and ||x_k||², so it fires on x_k alone. v_k = y_k/(||x_k||² − b_k) makes f(x_k) = y_k,
//! and every neuron is then rescaled to |v_k| = 1.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::curvature::{lambda_max, tangent_features, CurvatureReport, Method};
use crate::data::Dataset;
use crate::model::Network;
use crate::numerics::SeedSpec;
use crate::{Error, Result};

pub const UNIT_TOL: f64 = 1e-9;
pub const DUPLICATE_TOL: f64 = 1e-9;
/// Labels with |y| at or below this get no neuron.
pub const ZERO_LABEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatBuildReport {
    pub net: Network,
    pub width: usize,
    /// Sample index each neuron is built on.
    pub sample_of_neuron: Vec<usize>,
    /// ρ_k per neuron.
    pub rho: Vec<f64>,
    pub max_interp_error: f64,
    /// Power iteration on Hessian-vector products.
    pub curvature: CurvatureReport,
    /// Top eigenvalue of (1/n)ΦᵀΦ from its diagonal-plus-rank-one structure.
    pub lambda_max_blocks: f64,
    pub bound_rhs: f64,
}

impl FlatBuildReport {
    pub fn lambda_max(&self) -> f64 {
        self.curvature.lambda_max
    }

    pub fn within_bound(&self, slack: f64) -> bool {
        self.curvature.lambda_max <= self.bound_rhs + slack && self.lambda_max_blocks <= self.bound_rhs + slack
    }
}

/// max_{i≠k} x_i·x_k for every k (−1 when n = 1); errors on non-unit or near-duplicate rows.
fn separation(data: &Dataset) -> Result<Vec<f64>> {
    let x = data.features();
    let n = data.n();
    for (i, row) in x.rows().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::Precondition(format!("input {i} has norm {norm}, not 1")));
        }
    }
    let gram = x.dot(&x.t());
    let mut rho = vec![-1.0f64; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let g = gram[[i, j]];
            let approx = (gram[[i, i]] + gram[[j, j]] - 2.0 * g).max(0.0).sqrt();
            if approx < 1e-6 {
                let exact = (&x.row(i) - &x.row(j)).mapv(|e| e * e).sum().sqrt();
                if exact <= DUPLICATE_TOL {
                    return Err(Error::Precondition(format!(
                        "inputs {i} and {j} are within {exact:e} of each other"
                    )));
                }
            }
            rho[i] = rho[i].max(g);
            rho[j] = rho[j].max(g);
        }
    }
    Ok(rho)
}

/// Largest root of λ = max(diag) + ... for D + 11ᵀ: solves 1 = Σ_i 1/(λ − d_i).
fn top_eig_diag_plus_ones(diag: &[f64]) -> f64 {
    let dmax = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let secular = |lam: f64| 1.0 - diag.iter().map(|d| 1.0 / (lam - d)).sum::<f64>();
    let (mut lo, mut hi) = (dmax, dmax + diag.len() as f64 + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if secular(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Top eigenvalue of (1/n)ΦΦᵀ via the n×n Gram matrix ΦᵀΦ, after checking it is
/// diagonal plus the all-ones output-bias term.
fn lambda_from_blocks(net: &Network, data: &Dataset) -> Result<f64> {
    let phi = tangent_features(net, data)?;
    let gram = phi.t().dot(&phi);
    let n = data.n();
    let off = if net.has_output_bias { 1.0 } else { 0.0 };
    for i in 0..n {
        for j in 0..n {
            if i != j && (gram[[i, j]] - off).abs() > 1e-12 {
                return Err(Error::Construction(format!(
                    "tangent features of samples {i} and {j} overlap outside the output bias"
                )));
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| gram[[i, i]] - off).collect();
    let top = if net.has_output_bias {
        top_eig_diag_plus_ones(&diag)
    } else {
        diag.iter().cloned().fold(0.0, f64::max)
    };
    Ok(top / n as f64)
}

pub fn build_flat_interpolator(data: &Dataset, with_output_bias: bool) -> Result<FlatBuildReport> {
    let n = data.n();
    if n == 0 {
        return Err(Error::Arity("empty dataset".into()));
    }
    let rho_all = separation(data)?;
    let x = data.features();
    let y = data.labels();
    let chosen: Vec<usize> = (0..n).filter(|&i| y[i].abs() > ZERO_LABEL_TOL).collect();
    let k = chosen.len();
    let d = data.dim();
    let mut w = Array2::zeros((k, d));
    let mut b = Array1::zeros(k);
    let mut v = Array1::zeros(k);
    let mut rho = Vec::with_capacity(k);
    for (kk, &i) in chosen.iter().enumerate() {
        let xi = x.row(i);
        let sq = xi.dot(&xi);
        let bk = 0.5 * (sq + rho_all[i]);
        w.row_mut(kk).assign(&xi);
        b[kk] = bk;
        v[kk] = y[i] / (sq - bk);
        rho.push(rho_all[i]);
    }
    let raw = Network::new(w, b, v, 0.0, with_output_bias)?;
    let (net, dropped) = raw.rescale_homogeneous();
    debug_assert!(dropped.is_empty());

    let f = net.forward(x)?;
    let max_interp_error = (&f - &y).iter().fold(0.0f64, |m, e| m.max(e.abs()));

    let curvature = if net.n_params() == 0 {
        CurvatureReport {
            lambda_max: 0.0,
            iterations: 0,
            method: Method::PowerHvp,
            converged: true,
            shifted: false,
            kink_count: 0,
            two_over_eta: None,
            beos: None,
        }
    } else {
        lambda_max(&net, data, 1e-9, 20_000, SeedSpec::new(0xf1a7, 0))?
    };
    let lambda_max_blocks = lambda_from_blocks(&net, data)?;
    let dd = data.label_bound();
    let bound_rhs = (dd * dd + 2.0) / n as f64 + if with_output_bias { 1.0 } else { 0.0 };
    Ok(FlatBuildReport {
        width: k,
        sample_of_neuron: chosen,
        rho,
        max_interp_error,
        curvature,
        lambda_max_blocks,
        bound_rhs,
        net,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneHotCheck {
    /// min_k z_k(x_k); +∞ for an empty network.
    pub min_positive_margin: f64,
    /// max over k and i ≠ k of z_k(x_i); −∞ when there is nothing to check.
    pub max_negative_margin: f64,
}

/// Check that neuron k fires on its own sample and on no other.
pub fn verify_one_hot_activation(report: &FlatBuildReport, data: &Dataset) -> Result<OneHotCheck> {
    let z = report.net.preactivations(data.features())?;
    let mut check = OneHotCheck {
        min_positive_margin: f64::INFINITY,
        max_negative_margin: f64::NEG_INFINITY,
    };
    for (k, col) in z.axis_iter(Axis(1)).enumerate() {
        let own = report.sample_of_neuron[k];
        for (i, &zik) in col.iter().enumerate() {
            if i == own {
                if zik <= 0.0 {
                    return Err(Error::Construction(format!("neuron {k} is inactive on its sample {i} (z = {zik})")));
                }
                check.min_positive_margin = check.min_positive_margin.min(zik);
            } else {
                if zik >= 0.0 {
                    return Err(Error::Construction(format!("neuron {k} is not strictly inactive on sample {i} (z = {zik})")));
                }
                check.max_negative_margin = check.max_negative_margin.max(zik);
            }
        }
    }
    Ok(check)
}
