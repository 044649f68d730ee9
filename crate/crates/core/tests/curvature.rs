use geolab::curvature::{dense_hessian, hvp, lambda_max, tangent_features, HessianOperator};
use geolab::data::{sample_features, Dataset, DistSpec};
use geolab::model::{loss_and_grad, Network};
use geolab::numerics::{power_iteration, unit_vector, SeedSpec};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array1;
use rand::Rng;

/// Random (net, data) with every |pre-activation| at least `margin`.
fn instance(n: usize, d: usize, k: usize, margin: f64, seed: u64) -> (Network, Dataset) {
    for attempt in 0..1000u64 {
        let s = SeedSpec::new(seed, attempt);
        let x = sample_features(&DistSpec::Gaussian { d }, n, s.child(0)).unwrap();
        let mut rng = s.child(1).rng();
        let y = Array1::from_shape_simple_fn(n, || rng.random_range(-1.0..1.0));
        let data = x.with_labels(y, None).unwrap();
        let mut net = Network::init(d, k, 1.0, true, s.child(2)).unwrap();
        net.b.mapv_inplace(|_| rng.random_range(-0.3..0.3));
        net.beta = 0.1;
        let z = net.preactivations(data.features()).unwrap();
        if z.iter().all(|t| t.abs() >= margin) {
            return (net, data);
        }
    }
    panic!("no instance with margins >= {margin}");
}

fn to_nalgebra(h: &ndarray::Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[[i, j]])
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den.max(1e-300)).sqrt()
}

#[test]
fn hvp_matches_central_difference_of_gradient() {
    let (net, data) = instance(50, 5, 8, 1e-3, 11);
    let mut rng = SeedSpec::new(3, 0).rng();
    for _ in 0..5 {
        let u = unit_vector(&mut rng, net.n_params());
        let hu = hvp(&net, &data, &u).unwrap().value;
        let h = 1e-6;
        let (mut np, mut nm) = (net.clone(), net.clone());
        np.axpy(h, &u);
        nm.axpy(-h, &u);
        let gp = loss_and_grad(&np, &data).unwrap().1;
        let gm = loss_and_grad(&nm, &data).unwrap().1;
        let fd: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        assert!(rel(&hu, &fd) <= 1e-5, "relative error {}", rel(&hu, &fd));
    }
}

#[test]
fn hvp_equals_dense_hessian_columns() {
    let (net, data) = instance(30, 4, 6, 1e-3, 12);
    let h = dense_hessian(&net, &data).unwrap();
    let p = net.n_params();
    for j in [0, p / 3, p - 1] {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        let col = hvp(&net, &data, &e).unwrap().value;
        for i in 0..p {
            assert!((col[i] - h[[i, j]]).abs() <= 1e-12 * (1.0 + h[[i, j]].abs()), "entry ({i}, {j})");
        }
    }
}

#[test]
fn hessian_is_symmetric() {
    let (net, data) = instance(50, 5, 8, 1e-3, 13);
    let op = HessianOperator::new(&net, &data).unwrap();
    let mut rng = SeedSpec::new(4, 0).rng();
    let p = op.dim();
    for _ in 0..10 {
        let (a, b) = (unit_vector(&mut rng, p), unit_vector(&mut rng, p));
        let (mut ha, mut hb) = (vec![0.0; p], vec![0.0; p]);
        op.apply(&a, &mut ha);
        op.apply(&b, &mut hb);
        let ahb: f64 = a.iter().zip(&hb).map(|(x, y)| x * y).sum();
        let bha: f64 = b.iter().zip(&ha).map(|(x, y)| x * y).sum();
        assert!((ahb - bha).abs() <= 1e-10 * ahb.abs().max(1.0));
    }
}

#[test]
fn lambda_max_matches_dense_eigensolver() {
    let (net, data) = instance(50, 5, 8, 1e-3, 14);
    let h = dense_hessian(&net, &data).unwrap();
    let eig = SymmetricEigen::new(to_nalgebra(&h));
    let top = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rep = lambda_max(&net, &data, 1e-13, 100_000, SeedSpec::new(5, 0)).unwrap();
    assert!(rep.converged);
    assert!((rep.lambda_max - top).abs() <= 1e-6 * top.abs(), "{} vs {top}", rep.lambda_max);
}

#[test]
fn gauss_newton_part_is_tangent_gram() {
    let (net, data) = instance(20, 3, 5, 1e-3, 15);
    let phi = tangent_features(&net, &data).unwrap();
    let n = data.n() as f64;
    // At zero residual the Hessian is exactly (1/n)ΦΦᵀ.
    let f = net.forward(data.features()).unwrap();
    let clean = data.clone().with_labels(f, None).unwrap();
    let h = dense_hessian(&net, &clean).unwrap();
    let gn = phi.dot(&phi.t()) / n;
    let diff = (&h - &gn).iter().fold(0.0f64, |m, e| m.max(e.abs()));
    assert!(diff <= 1e-12, "max difference {diff}");
}

#[test]
fn power_iteration_on_random_psd_matrix() {
    let mut rng = SeedSpec::new(21, 0).rng();
    let a = DMatrix::from_fn(20, 20, |_, _| rng.random_range(-1.0..1.0));
    let m = &a * a.transpose();
    let top = SymmetricEigen::new(m.clone()).eigenvalues.max();
    let r = power_iteration(
        |x, out| {
            for i in 0..20 {
                out[i] = (0..20).map(|j| m[(i, j)] * x[j]).sum();
            }
        },
        20,
        1e-14,
        200_000,
        SeedSpec::new(22, 0),
    )
    .unwrap();
    assert!(r.converged);
    assert!((r.eigenvalue - top).abs() <= 1e-8 * top);
}

#[test]
fn indefinite_hessian_top_eigenvalue() {
    // Residual cross terms make the Hessian indefinite. When the negative end
    // dominates in magnitude, the first pass finds it and the shifted pass
    // must still recover the top eigenvalue.
    let (net, data) = instance(40, 4, 6, 1e-3, 16);
    let h = dense_hessian(&net, &data).unwrap();
    let eig = SymmetricEigen::new(to_nalgebra(&h));
    let top = eig.eigenvalues.max();
    let bottom = eig.eigenvalues.min();
    let rep = lambda_max(&net, &data, 1e-13, 200_000, SeedSpec::new(6, 0)).unwrap();
    if top.abs() < bottom.abs() {
        assert!(rep.shifted);
    }
    assert!((rep.lambda_max - top).abs() <= 1e-6 * top.abs().max(bottom.abs()));
}
