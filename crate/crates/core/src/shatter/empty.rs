use ndarray::ArrayView2;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::capmass::{atom_eval, batch_stderr, choose_eps_with, CapMassEstimator, DEFAULT_CALIBRATION_MC};
use super::packing::{pack_caps, CapPacking};
use crate::data::beta_radial_radius;
use crate::numerics::{ols_loglog, unit_vector, SeedSpec, SlopeFit};
use crate::{Error, Result};

/// Two sign patterns over a cap packing that differ exactly on the caps with no sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialPair {
    pub packing: CapPacking,
    pub xi: Vec<i8>,
    pub xi_prime: Vec<i8>,
    /// Caps containing no sample point; ξ and ξ′ differ exactly here.
    pub empty: Vec<usize>,
    /// No empty cap: the two functions coincide.
    pub degenerate: bool,
}

impl AdversarialPair {
    /// Atom scale ε^{−2}: Φ_i = ε^{−2}·relu(u_i·x − (1 − ε²)).
    pub fn normalization(&self) -> f64 {
        1.0 / (self.packing.eps * self.packing.eps)
    }

    fn eval_signs(&self, signs: &[i8], x: &[f64]) -> f64 {
        let eps = self.packing.eps;
        let mut f = 0.0;
        for (u, &s) in self.packing.centers.iter().zip(signs) {
            f += f64::from(s) * atom_eval(u, eps, x, true);
        }
        f
    }

    /// f_ξ(x) = Σ_i ξ_i Φ_i(x)
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_signs(&self.xi, x)
    }

    /// f_ξ′(x)
    pub fn eval_prime(&self, x: &[f64]) -> f64 {
        self.eval_signs(&self.xi_prime, x)
    }

    /// True when f_ξ and f_ξ′ agree bit for bit at every row of `x`.
    pub fn agrees_on(&self, x: ArrayView2<'_, f64>) -> bool {
        x.rows().into_iter().all(|r| {
            let r = r.to_vec();
            self.eval(&r).to_bits() == self.eval_prime(&r).to_bits()
        })
    }
}

/// Caps without sample points get opposite signs; all others get +1.
pub fn build_adversarial_pair(sample: ArrayView2<'_, f64>, packing: &CapPacking) -> Result<AdversarialPair> {
    if packing.is_empty() {
        return Err(Error::Domain("packing has no caps".into()));
    }
    if sample.ncols() != packing.d {
        return Err(Error::Arity(format!("sample dimension {} vs packing {}", sample.ncols(), packing.d)));
    }
    let mut occupied = vec![false; packing.len()];
    let min_norm = packing.level();
    for row in sample.rows() {
        if row.dot(&row) <= min_norm * min_norm {
            continue;
        }
        if let Some(i) = packing.cap_of(&row.to_vec()) {
            occupied[i] = true;
        }
    }
    let empty: Vec<usize> = (0..packing.len()).filter(|&i| !occupied[i]).collect();
    let xi = vec![1i8; packing.len()];
    let mut xi_prime = xi.clone();
    for &i in &empty {
        xi_prime[i] = -1;
    }
    Ok(AdversarialPair {
        packing: packing.clone(),
        xi,
        xi_prime,
        degenerate: empty.is_empty(),
        empty,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationEstimate {
    /// Monte-Carlo ||f_ξ − f_ξ′||²_{L²} under the Beta-radial law.
    pub mc: f64,
    pub mc_stderr: f64,
    /// 4·|J|·||Φ||²_{L²} from the cap estimator.
    pub disjoint: f64,
}

/// ||f_ξ − f_ξ′||² by plain Monte Carlo on the annulus ||x|| > 1 − ε² (where every
/// atom lives), which carries probability ε^{2α}; compared with 4|J|·||Φ||².
pub fn separation(pair: &AdversarialPair, alpha: f64, est: &CapMassEstimator, n_mc: usize, seed: SeedSpec) -> Result<SeparationEstimate> {
    let p = &pair.packing;
    let eps = p.eps;
    let e2 = eps * eps;
    let mut in_j = vec![false; p.len()];
    pair.empty.iter().for_each(|&i| in_j[i] = true);
    let mut rng = seed.rng();
    let mut sums = [0.0; 10];
    let mut counts = [0usize; 10];
    for k in 0..n_mc {
        let a = e2 * (1.0 - rng.random::<f64>()).powf(1.0 / alpha);
        let mut x = unit_vector(&mut rng, p.d);
        x.iter_mut().for_each(|c| *c *= 1.0 - a);
        let b = k * 10 / n_mc;
        counts[b] += 1;
        if let Some(i) = p.cap_of(&x) {
            if in_j[i] {
                let phi = atom_eval(&p.centers[i], eps, &x, true);
                sums[b] += 4.0 * phi * phi;
            }
        }
    }
    let annulus = e2.powf(alpha);
    let batch: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| annulus * s / c.max(1) as f64).collect();
    let mc = annulus * sums.iter().sum::<f64>() / n_mc as f64;
    let atom = est.estimate(eps)?;
    let phi_sq = (atom.atom_l2 / e2).powi(2);
    Ok(SeparationEstimate {
        mc,
        mc_stderr: batch_stderr(&batch),
        disjoint: 4.0 * pair.empty.len() as f64 * phi_sq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmptyCapOptions {
    /// Use this ε instead of calibrating (required when n < 10).
    pub eps: Option<f64>,
    pub target_lambda: f64,
    pub calibration_mc: usize,
    /// Also run each trial with exactly n points.
    pub fixed_n_comparison: bool,
    /// Build the adversarial pair per trial and check bitwise agreement on the sample.
    pub check_pairs: bool,
    /// Monte-Carlo samples for the per-trial separation estimate (0 = skip).
    pub separation_mc: usize,
}

impl Default for EmptyCapOptions {
    fn default() -> Self {
        Self {
            eps: None,
            target_lambda: 1.0,
            calibration_mc: DEFAULT_CALIBRATION_MC,
            fixed_n_comparison: true,
            check_pairs: true,
            separation_mc: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmptyCapTrial {
    pub trial: usize,
    pub n_poisson: usize,
    pub empty: usize,
    pub fraction: f64,
    /// empty ≥ (1/2)e^{−λ̂}N
    pub event: bool,
    pub fixed_n_fraction: Option<f64>,
    pub pair_agrees: Option<bool>,
    pub separation: Option<SeparationEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmptyCapReport {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub eps: f64,
    pub n_caps: usize,
    pub lambda_hat: f64,
    pub chernoff_reference: f64,
    pub trials: Vec<EmptyCapTrial>,
    pub mean_fraction: f64,
    pub event_rate: f64,
    pub fixed_n_mean_fraction: Option<f64>,
}

/// Fraction of caps with no point of `x`; only rows in the annulus can hit a cap.
fn empty_fraction(points: &[Vec<f64>], packing: &CapPacking) -> (usize, Vec<bool>) {
    let mut occupied = vec![false; packing.len()];
    for x in points {
        if let Some(i) = packing.cap_of(x) {
            occupied[i] = true;
        }
    }
    (occupied.iter().filter(|o| !**o).count(), occupied)
}

fn sample_beta_radial(d: usize, alpha: f64, n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut u = unit_vector(rng, d);
            let r = beta_radial_radius(rng.random::<f64>(), alpha);
            u.iter_mut().for_each(|c| *c *= r);
            u
        })
        .collect()
}

/// Poissonized occupancy of a disjoint cap packing at the calibrated scale ε.
pub fn empty_cap_experiment(
    n: usize,
    d: usize,
    alpha: f64,
    trials: usize,
    seed: SeedSpec,
    opts: &EmptyCapOptions,
) -> Result<EmptyCapReport> {
    if trials < 10 {
        return Err(Error::Domain(format!("need at least 10 trials, got {trials}")));
    }
    let est = CapMassEstimator::new(d, alpha, opts.calibration_mc, seed.child(0))?;
    let eps = match opts.eps {
        Some(e) => e,
        None if n == 0 => 0.5,
        None => choose_eps_with(&est, n, opts.target_lambda)?.eps,
    };
    let packing = pack_caps(d, eps, seed.child(1), None)?;
    let lambda_hat = n as f64 * est.mass(eps);
    let reference = (-lambda_hat).exp();
    let half = 0.5 * reference * packing.len() as f64;

    let jobs: Vec<usize> = (0..trials).collect();
    let rows: Vec<Result<EmptyCapTrial>> = crate::par::map(jobs, |t| {
        let ts = seed.child(2).child(t as u64);
        let mut rng = ts.rng();
        let n_poi = if n == 0 {
            0
        } else {
            Poisson::new(n as f64).expect("positive mean").sample(&mut rng) as usize
        };
        let pts = sample_beta_radial(d, alpha, n_poi, &mut rng);
        let (empty, _) = empty_fraction(&pts, &packing);
        let fixed = opts.fixed_n_comparison.then(|| {
            let mut r2 = ts.child(1).rng();
            let fixed_pts = sample_beta_radial(d, alpha, n, &mut r2);
            empty_fraction(&fixed_pts, &packing).0 as f64 / packing.len() as f64
        });
        let (pair_agrees, separation) = if opts.check_pairs || opts.separation_mc > 0 {
            let flat: Vec<f64> = pts.iter().flatten().copied().collect();
            let x = ndarray::Array2::from_shape_vec((n_poi, d), flat).expect("rows of length d");
            let pair = build_adversarial_pair(x.view(), &packing)?;
            let sep = if opts.separation_mc > 0 {
                Some(separation(&pair, alpha, &est, opts.separation_mc, ts.child(2))?)
            } else {
                None
            };
            (opts.check_pairs.then(|| pair.agrees_on(x.view())), sep)
        } else {
            (None, None)
        };
        Ok(EmptyCapTrial {
            trial: t,
            n_poisson: n_poi,
            empty,
            fraction: empty as f64 / packing.len() as f64,
            event: empty as f64 >= half,
            fixed_n_fraction: fixed,
            pair_agrees,
            separation,
        })
    });
    let trials_out = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let m = trials_out.len() as f64;
    let mean_fraction = trials_out.iter().map(|t| t.fraction).sum::<f64>() / m;
    let event_rate = trials_out.iter().filter(|t| t.event).count() as f64 / m;
    let fixed_n_mean_fraction = opts
        .fixed_n_comparison
        .then(|| trials_out.iter().filter_map(|t| t.fixed_n_fraction).sum::<f64>() / m);
    Ok(EmptyCapReport {
        n,
        d,
        alpha,
        eps,
        n_caps: packing.len(),
        lambda_hat,
        chernoff_reference: reference,
        trials: trials_out,
        mean_fraction,
        event_rate,
        fixed_n_mean_fraction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub n: usize,
    pub eps: f64,
    pub lambda_hat: f64,
    pub n_caps: usize,
    pub mean_empty: f64,
    pub sep_mc: f64,
    pub sep_mc_stderr: f64,
    pub sep_disjoint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub rows: Vec<SeparationRow>,
    /// log ||f − f′||² (Monte Carlo) on log n.
    pub fit: SlopeFit,
    /// Same with the 4|J|·||Φ||² route.
    pub fit_disjoint: SlopeFit,
}

/// Separation of the indistinguishable pair as n grows with ε = choose_eps(n).
pub fn separation_scan(
    n_values: &[usize],
    d: usize,
    alpha: f64,
    trials: usize,
    separation_mc: usize,
    seed: SeedSpec,
) -> Result<SeparationReport> {
    let mut rows = Vec::new();
    for &n in n_values {
        let opts = EmptyCapOptions {
            fixed_n_comparison: false,
            check_pairs: false,
            separation_mc,
            ..Default::default()
        };
        let rep = empty_cap_experiment(n, d, alpha, trials, seed.child(n as u64), &opts)?;
        let m = rep.trials.len() as f64;
        let seps: Vec<SeparationEstimate> = rep.trials.iter().filter_map(|t| t.separation).collect();
        let sep_mc = seps.iter().map(|s| s.mc).sum::<f64>() / m;
        let se = (seps.iter().map(|s| s.mc_stderr.powi(2)).sum::<f64>()).sqrt() / m;
        rows.push(SeparationRow {
            n,
            eps: rep.eps,
            lambda_hat: rep.lambda_hat,
            n_caps: rep.n_caps,
            mean_empty: rep.trials.iter().map(|t| t.empty as f64).sum::<f64>() / m,
            sep_mc,
            sep_mc_stderr: se,
            sep_disjoint: seps.iter().map(|s| s.disjoint).sum::<f64>() / m,
        });
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let mc: Vec<f64> = rows.iter().map(|r| r.sep_mc).collect();
    let dj: Vec<f64> = rows.iter().map(|r| r.sep_disjoint).collect();
    Ok(SeparationReport {
        fit: ols_loglog(&ns, &mc)?,
        fit_disjoint: ols_loglog(&ns, &dj)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sample_size_leaves_every_cap_empty() {
        let rep = empty_cap_experiment(0, 3, 1.0, 10, SeedSpec::new(1, 0), &EmptyCapOptions {
            calibration_mc: 10_000,
            ..Default::default()
        })
        .unwrap();
        assert!(rep.trials.iter().all(|t| t.fraction == 1.0));
        assert_eq!(rep.eps, 0.5);
    }

    #[test]
    fn pair_agrees_on_sample_and_separates() {
        let packing = pack_caps(3, 0.3, SeedSpec::new(2, 0), None).unwrap();
        let mut rng = SeedSpec::new(2, 1).rng();
        let pts = sample_beta_radial(3, 1.0, 300, &mut rng);
        let x = ndarray::Array2::from_shape_vec((300, 3), pts.concat()).unwrap();
        let pair = build_adversarial_pair(x.view(), &packing).unwrap();
        assert!(!pair.degenerate);
        assert!(pair.agrees_on(x.view()));
        for &i in &pair.empty {
            let u = &packing.centers[i];
            assert!((pair.eval(u) - 1.0).abs() < 1e-12);
            assert!((pair.eval_prime(u) + 1.0).abs() < 1e-12);
        }
        let est = CapMassEstimator::new(3, 1.0, 200_000, SeedSpec::new(2, 2)).unwrap();
        let sep = separation(&pair, 1.0, &est, 200_000, SeedSpec::new(2, 3)).unwrap();
        assert!((sep.mc - sep.disjoint).abs() <= 3.0 * sep.mc_stderr + 0.01 * sep.disjoint, "{sep:?}");
    }

    #[test]
    fn poisson_counts_concentrate() {
        let n = 2000;
        let mut rng = SeedSpec::new(3, 0).rng();
        let pois = Poisson::new(n as f64).unwrap();
        let inside = (0..200)
            .filter(|_| {
                let k = pois.sample(&mut rng);
                (0.9 * n as f64..=1.1 * n as f64).contains(&k)
            })
            .count();
        let bound = 1.0 - 2.0 * (-0.01 * n as f64 / 3.0).exp();
        assert!(inside as f64 / 200.0 >= bound);
    }
}
