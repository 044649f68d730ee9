//! Two-layer ReLU network f(x) = Σ_k v_k·relu(w_k·x − b_k) + β.
//!
//! Flat parameter layout shared by the optimizer and the curvature operators:
//! `[W row 0, .., W row K-1, b, v, β]`, where β is present only when
//! `has_output_bias` is set.

mod checkpoint;
mod grad;

pub use checkpoint::{Checkpoint, Provenance};
pub use grad::{loss_and_grad, mse, GradWorkspace};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::SeedSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    /// K×d inner weights.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub v: Array1<f64>,
    pub beta: f64,
    pub has_output_bias: bool,
}

impl Network {
    pub fn new(w: Array2<f64>, b: Array1<f64>, v: Array1<f64>, beta: f64, has_output_bias: bool) -> Result<Self> {
        let net = Self {
            w,
            b,
            v,
            beta,
            has_output_bias,
        };
        net.validate()?;
        Ok(net)
    }

    /// Zero-width network computing the constant 0.
    pub fn empty(d: usize, has_output_bias: bool) -> Self {
        Self {
            w: Array2::zeros((0, d)),
            b: Array1::zeros(0),
            v: Array1::zeros(0),
            beta: 0.0,
            has_output_bias,
        }
    }

    /// Rows of W ~ N(0, init_scale²/d), b = 0, v = ±init_scale/√K, β = 0.
    pub fn init(d: usize, width: usize, init_scale: f64, has_output_bias: bool, seed: SeedSpec) -> Result<Self> {
        if d == 0 || width == 0 {
            return Err(Error::Model(format!("need d >= 1 and width >= 1, got d={d} width={width}")));
        }
        if !(init_scale.is_finite() && init_scale > 0.0) {
            return Err(Error::Domain(format!("init_scale must be positive, got {init_scale}")));
        }
        let mut rng = seed.rng();
        let ws = init_scale / (d as f64).sqrt();
        let w = Array2::from_shape_simple_fn((width, d), || {
            ws * rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let vs = init_scale / (width as f64).sqrt();
        let v = Array1::from_shape_simple_fn(width, || if rng.random::<bool>() { vs } else { -vs });
        Self::new(w, Array1::zeros(width), v, 0.0, has_output_bias)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.w.nrows();
        if self.b.len() != k || self.v.len() != k {
            return Err(Error::Model(format!(
                "inconsistent widths: W has {k} rows, b {}, v {}",
                self.b.len(),
                self.v.len()
            )));
        }
        if !self.has_output_bias && self.beta != 0.0 {
            return Err(Error::Model("beta must be 0 without an output bias".into()));
        }
        let finite = self.w.iter().chain(&self.b).chain(&self.v).all(|x| x.is_finite()) && self.beta.is_finite();
        if !finite {
            return Err(Error::Numeric("network has non-finite parameters".into()));
        }
        if let Some(k) = self.w.rows().into_iter().position(|r| r.iter().all(|&x| x == 0.0)) {
            return Err(Error::Model(format!("neuron {k} has a zero weight vector")));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.w.nrows()
    }

    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_params(&self) -> usize {
        let k = self.width();
        k * self.dim() + 2 * k + usize::from(self.has_output_bias)
    }

    /// Offsets of the b, v and β blocks in the flat layout.
    pub fn offsets(&self) -> (usize, usize, usize) {
        let kd = self.width() * self.dim();
        (kd, kd + self.width(), kd + 2 * self.width())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend(self.w.iter());
        out.extend(self.b.iter());
        out.extend(self.v.iter());
        if self.has_output_bias {
            out.push(self.beta);
        }
        out
    }

    pub fn set_flat(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::Arity(format!("expected {} parameters, got {}", self.n_params(), theta.len())));
        }
        let (ob, ov, obeta) = self.offsets();
        self.w.iter_mut().zip(&theta[..ob]).for_each(|(a, b)| *a = *b);
        self.b.iter_mut().zip(&theta[ob..ov]).for_each(|(a, b)| *a = *b);
        self.v.iter_mut().zip(&theta[ov..obeta]).for_each(|(a, b)| *a = *b);
        if self.has_output_bias {
            self.beta = theta[obeta];
        }
        Ok(())
    }

    /// θ += scale·delta in the flat layout.
    pub fn axpy(&mut self, scale: f64, delta: &[f64]) {
        let (ob, ov, obeta) = self.offsets();
        assert_eq!(delta.len(), self.n_params());
        self.w.iter_mut().zip(&delta[..ob]).for_each(|(a, d)| *a += scale * d);
        self.b.iter_mut().zip(&delta[ob..ov]).for_each(|(a, d)| *a += scale * d);
        self.v.iter_mut().zip(&delta[ov..obeta]).for_each(|(a, d)| *a += scale * d);
        if self.has_output_bias {
            self.beta += scale * delta[obeta];
        }
    }

    fn check_dim(&self, x: &ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.dim() {
            return Err(Error::Arity(format!(
                "network has input dimension {}, data has {}",
                self.dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// n×K matrix of z_ik = w_k·x_i − b_k.
    pub fn preactivations(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_dim(&x)?;
        let mut z = x.dot(&self.w.t());
        z -= &self.b.view().insert_axis(Axis(0));
        Ok(z)
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let mut z = self.preactivations(x)?;
        z.mapv_inplace(|t| if t > 0.0 { t } else { 0.0 });
        Ok(z.dot(&self.v) + self.beta)
    }

    /// Σ_k |v_k|·||w_k||
    pub fn path_norm_unweighted(&self) -> f64 {
        self.w
            .rows()
            .into_iter()
            .zip(&self.v)
            .map(|(w, v)| v.abs() * w.dot(&w).sqrt())
            .sum()
    }

    /// Per-neuron rescaling to |v_k| = 1; returns the indices of neurons with v_k = 0,
    /// which are dropped because they contribute nothing.
    pub fn rescale_homogeneous(&self) -> (Network, Vec<usize>) {
        let keep: Vec<usize> = (0..self.width()).filter(|&k| self.v[k] != 0.0).collect();
        let dropped: Vec<usize> = (0..self.width()).filter(|&k| self.v[k] == 0.0).collect();
        let mut w = self.w.select(Axis(0), &keep);
        let mut b = self.b.select(Axis(0), &keep);
        let mut v = self.v.select(Axis(0), &keep);
        for k in 0..keep.len() {
            let a = v[k].abs();
            w.row_mut(k).mapv_inplace(|x| x * a);
            b[k] *= a;
            v[k] = v[k].signum();
        }
        let net = Network {
            w,
            b,
            v,
            beta: self.beta,
            has_output_bias: self.has_output_bias,
        };
        (net, dropped)
    }
}

pub fn forward(net: &Network, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    net.forward(x)
}

pub fn path_norm_unweighted(net: &Network) -> f64 {
    net.path_norm_unweighted()
}

pub fn rescale_homogeneous(net: &Network) -> (Network, Vec<usize>) {
    net.rescale_homogeneous()
}
