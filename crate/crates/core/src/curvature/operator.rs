use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, ArrayViewMut2};

use super::{DENSE_CAP, KINK_TOL};
use crate::data::Dataset;
use crate::model::Network;
use crate::{Error, Result};

/// Hessian of the training loss at a fixed (network, data), applied matrix-free.
#[derive(Debug, Clone)]
pub struct HessianOperator<'a> {
    net: &'a Network,
    x: ArrayView2<'a, f64>,
    /// 1{z_ik > 0}
    mask: Array2<f64>,
    /// relu(z_ik)
    act: Array2<f64>,
    /// (1/n)Σ_i r_i 1_ik x_i, K×d
    c: Array2<f64>,
    /// (1/n)Σ_i r_i 1_ik
    cb: Array1<f64>,
    kinks: usize,
}

/// Result of a single Hessian-vector product.
#[derive(Debug, Clone)]
pub struct Hvp {
    pub value: Vec<f64>,
    /// Number of (sample, neuron) pairs with |z| < KINK_TOL.
    pub kink_count: usize,
}

impl<'a> HessianOperator<'a> {
    pub fn new(net: &'a Network, data: &'a Dataset) -> Result<Self> {
        let n = data.n();
        if n == 0 {
            return Err(Error::Arity("empty dataset".into()));
        }
        let x = data.features();
        let z = net.preactivations(x)?;
        let kinks = z.iter().filter(|t| t.abs() < KINK_TOL).count();
        let mask = z.mapv(|t| if t > 0.0 { 1.0 } else { 0.0 });
        let act = z.mapv(|t| t.max(0.0));
        let f = act.dot(&net.v) + net.beta;
        let r = &f - &data.labels();
        let inv_n = 1.0 / n as f64;
        let mut rm = mask.clone();
        for (mut row, ri) in rm.rows_mut().into_iter().zip(&r) {
            row.mapv_inplace(|m| m * ri * inv_n);
        }
        let c = rm.t().dot(&x);
        let cb = rm.sum_axis(ndarray::Axis(0));
        Ok(Self {
            net,
            x,
            mask,
            act,
            c,
            cb,
            kinks,
        })
    }

    pub fn dim(&self) -> usize {
        self.net.n_params()
    }

    pub fn kink_count(&self) -> usize {
        self.kinks
    }

    /// out = H·vec
    pub fn apply(&self, vec: &[f64], out: &mut [f64]) {
        let net = self.net;
        let (n, d, k) = (self.x.nrows(), net.dim(), net.width());
        let (ob, ov, obeta) = net.offsets();
        assert_eq!(vec.len(), net.n_params());
        assert_eq!(out.len(), net.n_params());
        let dw = ArrayView2::from_shape((k, d), &vec[..ob]).expect("W block");
        let db = &vec[ob..ov];
        let dv = &vec[ov..obeta];
        let dbeta = if net.has_output_bias { vec[obeta] } else { 0.0 };
        let inv_n = 1.0 / n as f64;

        // Jacobian-vector products s_i = ∇f(x_i)·vec, then q_ik = s_i·1_ik·v_k/n.
        let mut p = Array2::<f64>::zeros((n, k));
        general_mat_mul(1.0, &self.x, &dw.t(), 0.0, &mut p);
        let v = net.v.as_slice().expect("contiguous v");
        let mut s = Array1::<f64>::zeros(n);
        for i in 0..n {
            let (mi, ai) = (row(&self.mask, i), row(&self.act, i));
            let pi = p.row(i).to_slice().expect("row-major p");
            let mut acc = dbeta;
            for kk in 0..k {
                acc += mi[kk] * v[kk] * (pi[kk] - db[kk]) + ai[kk] * dv[kk];
            }
            s[i] = acc * inv_n;
        }
        let (ow, rest) = out.split_at_mut(ob);
        let (obb, rest) = rest.split_at_mut(ov - ob);
        let (ovv, obt) = rest.split_at_mut(obeta - ov);
        obb.fill(0.0);
        ovv.fill(0.0);
        for i in 0..n {
            let (mi, ai) = (row(&self.mask, i), row(&self.act, i));
            let si = s[i];
            let pi = p.row_mut(i).into_slice().expect("row-major p");
            for kk in 0..k {
                let q = si * mi[kk] * v[kk];
                pi[kk] = q;
                obb[kk] -= q;
                ovv[kk] += si * ai[kk];
            }
        }
        let mut ow2 = ArrayViewMut2::from_shape((k, d), ow).expect("W block");
        general_mat_mul(1.0, &p.t(), &self.x, 0.0, &mut ow2);
        if net.has_output_bias {
            obt[0] = s.sum();
        }

        // Residual cross blocks between v_k and (w_k, b_k).
        for kk in 0..k {
            let ck = self.c.row(kk);
            let mut roww = ow2.row_mut(kk);
            let mut cdot = 0.0;
            for j in 0..d {
                roww[j] += dv[kk] * ck[j];
                cdot += ck[j] * dw[[kk, j]];
            }
            obb[kk] -= dv[kk] * self.cb[kk];
            ovv[kk] += cdot - self.cb[kk] * db[kk];
        }
    }
}

fn row(a: &Array2<f64>, i: usize) -> &[f64] {
    a.row(i).to_slice().expect("row-major matrix")
}

/// H·vec at (net, data).
pub fn hvp(net: &Network, data: &Dataset, vec: &[f64]) -> Result<Hvp> {
    let op = HessianOperator::new(net, data)?;
    if vec.len() != op.dim() {
        return Err(Error::Arity(format!("expected {} parameters, got {}", op.dim(), vec.len())));
    }
    let mut value = vec![0.0; op.dim()];
    op.apply(vec, &mut value);
    Ok(Hvp {
        value,
        kink_count: op.kink_count(),
    })
}

/// p×n matrix whose column i is ∇_θ f(x_i).
pub fn tangent_features(net: &Network, data: &Dataset) -> Result<Array2<f64>> {
    let x = data.features();
    let z = net.preactivations(x)?;
    let (n, d, k) = (data.n(), net.dim(), net.width());
    let (ob, ov, obeta) = net.offsets();
    let mut phi = Array2::zeros((net.n_params(), n));
    for i in 0..n {
        let mut col = phi.column_mut(i);
        for kk in 0..k {
            let zik = z[[i, kk]];
            if zik > 0.0 {
                for j in 0..d {
                    col[kk * d + j] = net.v[kk] * x[[i, j]];
                }
                col[ob + kk] = -net.v[kk];
                col[ov + kk] = zik;
            }
        }
        if net.has_output_bias {
            col[obeta] = 1.0;
        }
    }
    Ok(phi)
}

/// Explicit Hessian, assembled from the tangent features and the residual cross blocks.
pub fn dense_hessian(net: &Network, data: &Dataset) -> Result<Array2<f64>> {
    dense_hessian_capped(net, data, DENSE_CAP)
}

pub fn dense_hessian_capped(net: &Network, data: &Dataset, cap: usize) -> Result<Array2<f64>> {
    let p = net.n_params();
    if p > cap {
        return Err(Error::Size { count: p, cap });
    }
    let n = data.n() as f64;
    let phi = tangent_features(net, data)?;
    let mut h = phi.dot(&phi.t()) / n;
    let z = net.preactivations(data.features())?;
    let f = z.mapv(|t| t.max(0.0)).dot(&net.v) + net.beta;
    let r = &f - &data.labels();
    let (d, k) = (net.dim(), net.width());
    let (ob, ov, _) = net.offsets();
    for kk in 0..k {
        for i in 0..data.n() {
            if z[[i, kk]] > 0.0 {
                let ri = r[i] / n;
                for j in 0..d {
                    let val = ri * data.features()[[i, j]];
                    h[[kk * d + j, ov + kk]] += val;
                    h[[ov + kk, kk * d + j]] += val;
                }
                h[[ob + kk, ov + kk]] -= ri;
                h[[ov + kk, ob + kk]] -= ri;
            }
        }
    }
    Ok(h)
}
