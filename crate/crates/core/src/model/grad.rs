use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2};

use super::Network;
use crate::data::Dataset;
use crate::{Error, Result};

/// Scratch buffers for repeated loss/gradient evaluations on a fixed (n, K).
#[derive(Debug, Clone)]
pub struct GradWorkspace {
    z: Array2<f64>,
    m: Array2<f64>,
    residual: Array1<f64>,
}

impl GradWorkspace {
    pub fn new(n: usize, width: usize) -> Self {
        Self {
            z: Array2::zeros((n, width)),
            m: Array2::zeros((n, width)),
            residual: Array1::zeros(n),
        }
    }

    /// Residuals f(x_i) − y_i from the last evaluation.
    pub fn residual(&self) -> ArrayView1<'_, f64> {
        self.residual.view()
    }

    /// Loss (1/2n)Σr² with its gradient written to `grad` in the flat layout.
    pub fn loss_and_grad(
        &mut self,
        net: &Network,
        x: ArrayView2<'_, f64>,
        y: ArrayView1<'_, f64>,
        grad: &mut [f64],
    ) -> Result<f64> {
        let (n, d, k) = (x.nrows(), net.dim(), net.width());
        if x.ncols() != d || y.len() != n {
            return Err(Error::Arity(format!(
                "network dimension {d} vs data {}x{} with {} labels",
                n,
                x.ncols(),
                y.len()
            )));
        }
        if n == 0 {
            return Err(Error::Arity("empty dataset".into()));
        }
        if grad.len() != net.n_params() {
            return Err(Error::Arity("gradient buffer has the wrong length".into()));
        }
        if self.z.dim() != (n, k) {
            *self = Self::new(n, k);
        }
        general_mat_mul(1.0, &x, &net.w.t(), 0.0, &mut self.z);
        let inv_n = 1.0 / n as f64;
        let (bias, v) = (
            net.b.as_slice().expect("contiguous b"),
            net.v.as_slice().expect("contiguous v"),
        );
        let mut loss = 0.0;
        let mut rsum = 0.0;
        // Branchless passes: activation patterns are close to random, so a
        // data-dependent branch per unit mispredicts about half the time.
        for i in 0..n {
            let zi = self.z.row_mut(i).into_slice().expect("row-major z");
            let mut f = net.beta;
            for ((z, &bk), &vk) in zi.iter_mut().zip(bias).zip(v) {
                let a = (*z - bk).max(0.0);
                *z = a;
                f += vk * a;
            }
            let r = f - y[i];
            self.residual[i] = r;
            loss += r * r;
            rsum += r;
        }
        loss *= 0.5 * inv_n;

        let (ob, ov, obeta) = net.offsets();
        let (gw, rest) = grad.split_at_mut(ob);
        let (gb, rest) = rest.split_at_mut(ov - ob);
        let (gv, gbeta) = rest.split_at_mut(obeta - ov);
        gb.fill(0.0);
        gv.fill(0.0);
        for i in 0..n {
            let ri = self.residual[i] * inv_n;
            let ai = self.z.row(i).to_slice().expect("row-major z");
            let mi = self.m.row_mut(i).into_slice().expect("row-major m");
            for ((((&a, m), &vk), gvk), gbk) in ai.iter().zip(mi).zip(v).zip(gv.iter_mut()).zip(gb.iter_mut()) {
                let ind = if a > 0.0 { 1.0 } else { 0.0 };
                *gvk += ri * a;
                let mk = ri * vk * ind;
                *m = mk;
                *gbk -= mk;
            }
        }
        let mut gw = ArrayViewMut2::from_shape((k, d), gw).expect("W block shape");
        general_mat_mul(1.0, &self.m.t(), &x, 0.0, &mut gw);
        if net.has_output_bias {
            gbeta[0] = rsum * inv_n;
        }
        Ok(loss)
    }
}

/// Loss (1/2n)Σ(f(x_i) − y_i)² and its gradient in the flat parameter layout.
pub fn loss_and_grad(net: &Network, data: &Dataset) -> Result<(f64, Vec<f64>)> {
    let mut ws = GradWorkspace::new(data.n(), net.width());
    let mut grad = vec![0.0; net.n_params()];
    let loss = ws.loss_and_grad(net, data.features(), data.labels(), &mut grad)?;
    Ok((loss, grad))
}

/// Mean squared error against arbitrary targets (no 1/2 factor).
pub fn mse(net: &Network, x: ArrayView2<'_, f64>, target: ArrayView1<'_, f64>) -> Result<f64> {
    let f = net.forward(x)?;
    Ok((&f - &target).mapv(|e| e * e).mean().unwrap_or(0.0))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeedSpec;
    use ndarray::array;
    use rand::Rng;

    fn margin_net(seed: u64) -> (Network, Dataset) {
        let mut rng = SeedSpec::new(seed, 0).rng();
        loop {
            let mut net = Network::init(3, 6, 1.0, true, SeedSpec::new(seed, 1)).unwrap();
            net.b.mapv_inplace(|_| rng.random_range(-0.3..0.3));
            net.beta = 0.2;
            let x = Array2::from_shape_simple_fn((10, 3), || rng.random_range(-1.0..1.0));
            let y = Array1::from_shape_simple_fn(10, || rng.random_range(-1.0..1.0));
            let z = net.preactivations(x.view()).unwrap();
            if z.iter().all(|t| t.abs() >= 1e-3) {
                return (net, Dataset::new(x, y).unwrap());
            }
        }
    }

    #[test]
    fn matches_central_differences() {
        for seed in 0..5 {
            let (net, data) = margin_net(seed);
            let (loss, grad) = loss_and_grad(&net, &data).unwrap();
            let f = net.forward(data.features()).unwrap();
            let direct = (&f - &data.labels()).mapv(|r| r * r).sum() / (2.0 * data.n() as f64);
            assert!((loss - direct).abs() < 1e-14);
            let theta = net.to_flat();
            let h = 1e-5;
            for p in 0..theta.len() {
                let mut probe = net.clone();
                let mut t = theta.clone();
                t[p] += h;
                probe.set_flat(&t).unwrap();
                let lp = loss_and_grad(&probe, &data).unwrap().0;
                t[p] -= 2.0 * h;
                probe.set_flat(&t).unwrap();
                let lm = loss_and_grad(&probe, &data).unwrap().0;
                let fd = (lp - lm) / (2.0 * h);
                let rel = (fd - grad[p]).abs() / grad[p].abs().max(1e-3);
                assert!(rel < 1e-5, "seed {seed} param {p}: fd {fd} analytic {}", grad[p]);
            }
        }
    }

    #[test]
    fn interpolating_net_has_zero_gradient() {
        let net = Network::init(2, 3, 1.0, true, SeedSpec::new(7, 0)).unwrap();
        let x = array![[0.3, 0.4], [-0.5, 0.1]];
        let y = net.forward(x.view()).unwrap();
        let (loss, grad) = loss_and_grad(&net, &Dataset::new(x, y).unwrap()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn one_neuron_hand_gradient() {
        // f = 2·relu(0.5·1 + 1·2 − 0.5) + 0.25 = 4.25, y = 1, r = 3.25, z = 2.
        let net = Network::new(array![[0.5, 1.0]], array![0.5], array![2.0], 0.25, true).unwrap();
        let data = Dataset::new(array![[1.0, 2.0]], array![1.0]).unwrap();
        let (loss, g) = loss_and_grad(&net, &data).unwrap();
        let r = 3.25;
        assert!((loss - 0.5 * r * r).abs() < 1e-14);
        let want = [r * 2.0 * 1.0, r * 2.0 * 2.0, -r * 2.0, r * 2.0, r];
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn kink_contributes_nothing() {
        // z = 0 exactly: strict indicator gives zero gradient through the neuron.
        let net = Network::new(array![[1.0]], array![0.5], array![1.0], 0.0, false).unwrap();
        let data = Dataset::new(array![[0.5]], array![1.0]).unwrap();
        let (_, g) = loss_and_grad(&net, &data).unwrap();
        assert_eq!(g, vec![0.0, 0.0, 0.0]);
    }
}
