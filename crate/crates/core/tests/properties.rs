use geolab::curvature::{dense_hessian, HessianOperator};
use geolab::data::{sample_features, Dataset, DistSpec};
use geolab::depth::{tukey_depth_approx, DataDirections, DepthOptions};
use geolab::flatnet::build_flat_interpolator;
use geolab::model::{loss_and_grad, Network};
use geolab::numerics::{power_iteration, unit_vector, SeedSpec};
use geolab::shatter::{atom_eval, build_adversarial_pair, pack_caps};
use geolab::train::{gd_train, TrainConfig};
use geolab::weightfn::{beos_bound_check, g_empirical, weighted_path_norm, DirectionSweep, DirectionThreshold};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;

fn labelled(spec: &DistSpec, n: usize, seed: u64) -> Dataset {
    let x = sample_features(spec, n, SeedSpec::new(seed, 0)).unwrap();
    let mut rng = SeedSpec::new(seed, 1).rng();
    let y = Array1::from_shape_simple_fn(n, || rng.random_range(-1.0..=1.0));
    x.with_labels(y, None).unwrap()
}

fn random_net(d: usize, k: usize, seed: u64) -> Network {
    let mut net = Network::init(d, k, 1.0, true, SeedSpec::new(seed, 7)).unwrap();
    let mut rng = SeedSpec::new(seed, 8).rng();
    net.b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    net.beta = rng.random_range(-0.5..0.5);
    net
}

fn cfg() -> ProptestConfig {
    ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn power_iteration_scales_with_the_operator(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = SeedSpec::new(seed, 0).rng();
        let a = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let m = &a * a.transpose() + DMatrix::identity(8, 8);
        let m = &m;
        let mv = |scale: f64| move |x: &[f64], out: &mut [f64]| {
            for i in 0..8 {
                out[i] = scale * (0..8).map(|j| m[(i, j)] * x[j]).sum::<f64>();
            }
        };
        let one = power_iteration(mv(1.0), 8, 1e-13, 500_000, SeedSpec::new(seed, 1)).unwrap();
        let scaled = power_iteration(mv(c), 8, 1e-13, 500_000, SeedSpec::new(seed, 1)).unwrap();
        prop_assert!((scaled.eigenvalue / one.eigenvalue - c).abs() <= 1e-8 * c);
    }

    #[test]
    fn identical_seeds_give_identical_streams(master in any::<u64>(), stream in any::<u64>(), child in any::<u64>()) {
        let s = SeedSpec::new(master, stream).child(child);
        let a: Vec<u64> = (0..16).map({ let mut r = s.rng(); move |_| r.random() }).collect();
        let b: Vec<u64> = (0..16).map({ let mut r = s.rng(); move |_| r.random() }).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn forward_is_positively_homogeneous_per_neuron(seed in any::<u64>(), logc in -3.0f64..3.0) {
        let net = random_net(4, 6, seed);
        let data = labelled(&DistSpec::Ball { d: 4 }, 30, seed);
        let c = logc.exp();
        let mut scaled = net.clone();
        scaled.w.row_mut(2).mapv_inplace(|x| x * c);
        scaled.b[2] *= c;
        scaled.v[2] /= c;
        let f = net.forward(data.features()).unwrap();
        let g = scaled.forward(data.features()).unwrap();
        for (a, b) in f.iter().zip(&g) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        let wa = weighted_path_norm(&net, &data).unwrap().total;
        let wb = weighted_path_norm(&scaled, &data).unwrap().total;
        prop_assert!((wa - wb).abs() <= 1e-10 * (1.0 + wa));
    }

    #[test]
    fn gradient_matches_finite_differences_away_from_kinks(seed in any::<u64>()) {
        let net = random_net(3, 5, seed);
        let data = labelled(&DistSpec::Gaussian { d: 3 }, 25, seed);
        let z = net.preactivations(data.features()).unwrap();
        prop_assume!(z.iter().all(|t| t.abs() >= 1e-3));
        let (loss, grad) = loss_and_grad(&net, &data).unwrap();
        let f = net.forward(data.features()).unwrap();
        let direct = 0.5 * (&f - &data.labels()).mapv(|r| r * r).mean().unwrap();
        prop_assert!((loss - direct).abs() <= 1e-14 * (1.0 + direct));
        let theta = net.to_flat();
        for j in 0..theta.len() {
            let h = 1e-7;
            let mut e = vec![0.0; theta.len()];
            e[j] = h;
            let (mut p, mut m) = (net.clone(), net.clone());
            p.axpy(1.0, &e);
            m.axpy(-1.0, &e);
            let fd = (loss_and_grad(&p, &data).unwrap().0 - loss_and_grad(&m, &data).unwrap().0) / (2.0 * h);
            prop_assert!((fd - grad[j]).abs() <= 1e-6 * (1.0 + grad[j].abs()), "coordinate {}: {} vs {}", j, fd, grad[j]);
        }
    }

    #[test]
    fn hessian_symmetry_over_random_pairs(seed in any::<u64>()) {
        let net = random_net(5, 8, seed);
        let data = labelled(&DistSpec::Gaussian { d: 5 }, 40, seed);
        let op = HessianOperator::new(&net, &data).unwrap();
        let p = op.dim();
        let mut rng = SeedSpec::new(seed, 3).rng();
        for _ in 0..50 {
            let (a, b) = (unit_vector(&mut rng, p), unit_vector(&mut rng, p));
            let (mut ha, mut hb) = (vec![0.0; p], vec![0.0; p]);
            op.apply(&a, &mut ha);
            op.apply(&b, &mut hb);
            let ahb: f64 = a.iter().zip(&hb).map(|(x, y)| x * y).sum();
            let bha: f64 = b.iter().zip(&ha).map(|(x, y)| x * y).sum();
            prop_assert!((ahb - bha).abs() <= 1e-10);
        }
    }

    #[test]
    fn flat_interpolator_contract(seed in any::<u64>(), n in 2usize..60, d in 2usize..8, bias in any::<bool>()) {
        let data = labelled(&DistSpec::Sphere { d }, n, seed);
        // Near-duplicate inputs are a documented precondition failure.
        let Ok(rep) = build_flat_interpolator(&data, bias) else { return Ok(()); };
        prop_assert!(rep.max_interp_error <= 1e-9);
        let nonzero = data.labels().iter().filter(|y| y.abs() > 0.0).count();
        prop_assert_eq!(rep.width, nonzero);
        prop_assert!(rep.width <= n);
        let dmax = data.label_bound();
        let bound = (dmax * dmax + 2.0) / n as f64 + if bias { 1.0 } else { 0.0 };
        prop_assert!(rep.lambda_max() <= bound + 1e-6);
        prop_assert!(rep.lambda_max_blocks <= bound + 1e-6);
        // At interpolation the Hessian is PSD up to roundoff.
        if rep.net.n_params() <= 400 {
            let h = dense_hessian(&rep.net, &data).unwrap();
            let m = DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[[i, j]]);
            prop_assert!(SymmetricEigen::new(m).eigenvalues.min() >= -1e-10);
        }
    }

    #[test]
    fn g_stays_in_its_envelope_and_decreases_along_thresholds(seed in any::<u64>(), d in 2usize..6) {
        let data = labelled(&DistSpec::Ball { d }, 80, seed);
        let u = unit_vector(&mut SeedSpec::new(seed, 4).rng(), d);
        let r = data.radius();
        let sweep = DirectionSweep::new(data.features(), &u);
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=20 {
            let t = -1.0 + 0.1 * i as f64;
            let q = DirectionThreshold::new(u.clone(), t).unwrap();
            let g = g_empirical(&data, &q).unwrap();
            let env = (r + t.abs()) * (1.0 + r * r).sqrt();
            prop_assert!(g >= 0.0 && g <= env + 1e-12);
            let plus = sweep.at(t).plus;
            if let Some((p, pe)) = prev {
                prop_assert!(plus.p <= p + 1e-15);
                prop_assert!(plus.p * plus.e <= pe + 1e-12);
            }
            prev = Some((plus.p, plus.p * plus.e));
        }
    }

    #[test]
    fn adding_more_directions_never_raises_depth(seed in any::<u64>()) {
        let data = sample_features(&DistSpec::Gaussian { d: 3 }, 60, SeedSpec::new(seed, 0)).unwrap();
        let x = [0.1, -0.2, 0.05];
        let opts = |n, data_dirs| DepthOptions {
            n_directions: n,
            seed: SeedSpec::new(seed, 5),
            include_self: true,
            data_directions: data_dirs,
        };
        let few = tukey_depth_approx(&x, &data, &opts(16, DataDirections::Never)).unwrap();
        let more = tukey_depth_approx(&x, &data, &opts(16, DataDirections::Always)).unwrap();
        prop_assert!(more <= few);
    }

    #[test]
    fn atoms_are_disjoint_and_pair_is_bounded(seed in any::<u64>(), eps in 0.15f64..=0.5) {
        let packing = pack_caps(3, eps, SeedSpec::new(seed, 6), None).unwrap();
        let sample = sample_features(&DistSpec::BetaRadial { d: 3, alpha: 1.0 }, 40, SeedSpec::new(seed, 7)).unwrap();
        let pair = build_adversarial_pair(sample.features(), &packing).unwrap();
        let probe = sample_features(&DistSpec::Ball { d: 3 }, 400, SeedSpec::new(seed, 8)).unwrap();
        let sphere = sample_features(&DistSpec::Sphere { d: 3 }, 400, SeedSpec::new(seed, 9)).unwrap();
        for row in probe.features().rows().into_iter().chain(sphere.features().rows()) {
            let x = row.to_vec();
            let active = packing.centers.iter().filter(|u| atom_eval(u, eps, &x, true) != 0.0).count();
            prop_assert!(active <= 1);
            prop_assert!(pair.eval(&x).abs() <= 1.0 + 1e-12);
            prop_assert!(pair.eval_prime(&x).abs() <= 1.0 + 1e-12);
        }
        prop_assert!(pair.agrees_on(sample.features()));
    }
}

#[test]
fn training_is_deterministic_and_beos_flags_imply_the_bound() {
    let data = labelled(&DistSpec::Ball { d: 3 }, 60, 3);
    let net0 = Network::init(3, 12, 1.0, true, SeedSpec::new(3, 1)).unwrap();
    let cfg = TrainConfig {
        eta: 0.4,
        epochs: 300,
        clip_norm: Some(50.0),
        eval_every: 10,
        lambda_max_every: Some(10),
        ..TrainConfig::default()
    };
    let probe = geolab::curvature::PowerProbe { tol: 1e-10, max_iter: 5000, seed: SeedSpec::new(3, 2) };
    let a = gd_train(&net0, &data, &cfg, Some(&probe)).unwrap();
    let b = gd_train(&net0, &data, &cfg, Some(&probe)).unwrap();
    assert_eq!(a, b);
    let mut flagged = Vec::new();
    geolab::train::gd_train_observed(&net0, &data, &cfg, Some(&probe), &mut |rec, n: &Network| {
        if rec.beos == Some(true) {
            flagged.push(n.clone());
        }
    })
    .unwrap();
    for n in &flagged {
        let rep = beos_bound_check(n, &data, cfg.eta, None).unwrap();
        assert!(rep.bound.unwrap().satisfied);
    }
    assert!(!flagged.is_empty(), "no probed epoch was below the edge");
}

#[test]
fn small_steps_descend_over_every_window() {
    let data = labelled(&DistSpec::Ball { d: 4 }, 50, 9);
    let net0 = Network::init(4, 10, 1.0, true, SeedSpec::new(9, 1)).unwrap();
    let cfg = TrainConfig { eta: 0.001, epochs: 1000, clip_norm: None, eval_every: 100, ..TrainConfig::default() };
    let tr = gd_train(&net0, &data, &cfg, None).unwrap();
    for w in tr.records.windows(2) {
        assert!(w[1].train_loss <= w[0].train_loss);
    }
}

#[test]
fn sampled_designs_are_centred() {
    let x: Array2<f64> = sample_features(&DistSpec::BetaRadial { d: 5, alpha: 2.0 }, 40_000, SeedSpec::new(1, 0))
        .unwrap()
        .features()
        .to_owned();
    let n = x.nrows() as f64;
    for j in 0..5 {
        let col = x.column(j);
        let norms: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
        let mean_dir: f64 = col.iter().zip(&norms).map(|(v, r)| v / r).sum::<f64>() / n;
        // Coordinates of a uniform direction have variance 1/d.
        assert!(mean_dir.abs() <= 4.0 * (0.2f64 / n).sqrt(), "coordinate {j}: {mean_dir}");
    }
}
