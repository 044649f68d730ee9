use rand::Rng;
use serde::{Deserialize, Serialize};

use super::packing::sphere_cosine_constant;
use crate::data::beta_radial_radius;
use crate::numerics::{dot, ols_loglog, unit_vector, SeedSpec, SlopeFit};
use crate::{Error, Result};

/// relu(u·x − (1 − ε²)), divided by ε² when `normalized`.
pub fn atom_eval(u: &[f64], eps: f64, x: &[f64], normalized: bool) -> f64 {
    let raw = (dot(u, x) - (1.0 - eps * eps)).max(0.0);
    if normalized {
        raw / (eps * eps)
    } else {
        raw
    }
}

const BATCHES: usize = 10;

/// Cap mass and atom norm under the Beta-radial law at any ε ∈ (0, 1/2], from one
/// ε-free sample.
///
/// With a = 1 − ||X|| = ε²A and 1 − u·X/||X|| = ε²S, the cap is {A + S − ε²AS < 1},
/// which forces A, S < 1, and the atom equals ε²(1 − A − S + ε²AS)₊. On {A < 1},
/// A = V^{1/α} for uniform V (probability ε^{2α}); S is drawn from the density
/// ∝ S^{(d−3)/2} on [0, 1] and reweighted by (2 − ε²S)^{(d−3)/2} to the exact
/// cosine law. Every estimate is unbiased and reuses the same (A, S) draws, so the
/// mass is a smooth increasing function of ε.
#[derive(Debug, Clone)]
pub struct CapMassEstimator {
    d: usize,
    alpha: f64,
    a: Vec<f64>,
    s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapEstimate {
    pub eps: f64,
    pub mass: f64,
    pub mass_stderr: f64,
    /// ||φ||_{L²} of the raw atom.
    pub atom_l2: f64,
    pub atom_l2_stderr: f64,
    /// Samples inside the cap.
    pub hits: usize,
}

impl CapMassEstimator {
    pub fn new(d: usize, alpha: f64, n_mc: usize, seed: SeedSpec) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain("cap estimates need d >= 2".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        if n_mc < BATCHES {
            return Err(Error::Domain(format!("need at least {BATCHES} samples")));
        }
        let mut rng = seed.rng();
        let sp = 2.0 / (d as f64 - 1.0);
        let mut a = Vec::with_capacity(n_mc);
        let mut s = Vec::with_capacity(n_mc);
        for _ in 0..n_mc {
            a.push((1.0 - rng.random::<f64>()).powf(1.0 / alpha));
            s.push((1.0 - rng.random::<f64>()).powf(sp));
        }
        Ok(Self { d, alpha, a, s })
    }

    pub fn n_mc(&self) -> usize {
        self.a.len()
    }

    fn prefactor(&self, eps: f64) -> f64 {
        let d = self.d as f64;
        eps.powf(2.0 * self.alpha) * eps.powf(d - 1.0) * sphere_cosine_constant(self.d) * 2.0 / (d - 1.0)
    }

    /// Cap mass only (cheaper than [`Self::estimate`]).
    pub fn mass(&self, eps: f64) -> f64 {
        let e2 = eps * eps;
        let pw = (self.d as f64 - 3.0) / 2.0;
        let mut acc = 0.0;
        for (&a, &s) in self.a.iter().zip(&self.s) {
            if a + s - e2 * a * s < 1.0 {
                acc += (2.0 - e2 * s).powf(pw);
            }
        }
        self.prefactor(eps) * acc / self.a.len() as f64
    }

    pub fn estimate(&self, eps: f64) -> Result<CapEstimate> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::Domain(format!("eps must lie in (0, 1/2], got {eps}")));
        }
        let e2 = eps * eps;
        let pw = (self.d as f64 - 3.0) / 2.0;
        let n = self.a.len();
        let mut mass_b = [0.0; BATCHES];
        let mut sq_b = [0.0; BATCHES];
        let mut count_b = [0usize; BATCHES];
        let mut hits = 0;
        for i in 0..n {
            let (a, s) = (self.a[i], self.s[i]);
            let slack = 1.0 - a - s + e2 * a * s;
            let b = i * BATCHES / n;
            count_b[b] += 1;
            if slack > 0.0 {
                hits += 1;
                let w = (2.0 - e2 * s).powf(pw);
                mass_b[b] += w;
                sq_b[b] += w * (e2 * slack).powi(2);
            }
        }
        let pre = self.prefactor(eps);
        let means = |sums: &[f64; BATCHES]| -> Vec<f64> {
            sums.iter().zip(&count_b).map(|(s, &c)| pre * s / c as f64).collect()
        };
        let (mb, qb) = (means(&mass_b), means(&sq_b));
        let mass = pre * mass_b.iter().sum::<f64>() / n as f64;
        let sq = pre * sq_b.iter().sum::<f64>() / n as f64;
        let atom_l2 = sq.sqrt();
        let sq_se = batch_stderr(&qb);
        Ok(CapEstimate {
            eps,
            mass,
            mass_stderr: batch_stderr(&mb),
            atom_l2,
            atom_l2_stderr: if atom_l2 > 0.0 { sq_se / (2.0 * atom_l2) } else { 0.0 },
            hits,
        })
    }
}

pub(crate) fn batch_stderr(values: &[f64]) -> f64 {
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (var / b).sqrt()
}

/// Plain Monte-Carlo cap mass: fraction of Beta-radial draws with u·X > 1 − ε².
/// Independent of [`CapMassEstimator`]; usable only where the cap is not tiny.
pub fn cap_mass_naive(d: usize, alpha: f64, eps: f64, n_mc: usize, seed: SeedSpec) -> (f64, f64) {
    let mut rng = seed.rng();
    let level = 1.0 - eps * eps;
    let mut hits = 0usize;
    for _ in 0..n_mc {
        let r = beta_radial_radius(rng.random::<f64>(), alpha);
        let u = unit_vector(&mut rng, d);
        if r * u[0] > level {
            hits += 1;
        }
    }
    let p = hits as f64 / n_mc as f64;
    (p, (p * (1.0 - p) / n_mc as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapScalingReport {
    pub d: usize,
    pub alpha: f64,
    pub rows: Vec<CapEstimate>,
    pub mass_fit: SlopeFit,
    pub atom_l2_fit: SlopeFit,
}

/// Cap mass and atom L² norm over an ε grid with log-log slopes in ε.
pub fn cap_scaling_report(d: usize, alpha: f64, eps_grid: &[f64], n_mc: usize, seed: SeedSpec) -> Result<CapScalingReport> {
    if eps_grid.len() < 4 {
        return Err(Error::Arity("need at least 4 values of eps".into()));
    }
    let est = CapMassEstimator::new(d, alpha, n_mc, seed)?;
    let rows = eps_grid.iter().map(|&e| est.estimate(e)).collect::<Result<Vec<_>>>()?;
    if let Some(r) = rows.iter().find(|r| r.hits == 0) {
        return Err(Error::Resolution(format!(
            "no Monte-Carlo sample fell in the cap at eps={}; increase n_mc beyond {n_mc}",
            r.eps
        )));
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let mass: Vec<f64> = rows.iter().map(|r| r.mass).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.atom_l2).collect();
    Ok(CapScalingReport {
        d,
        alpha,
        mass_fit: ols_loglog(&eps, &mass)?,
        atom_l2_fit: ols_loglog(&eps, &l2)?,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsChoice {
    pub eps: f64,
    /// n × (estimated cap mass at eps).
    pub lambda_hat: f64,
    /// True when even ε = 1/2 gives λ below target and ε was clamped there.
    pub clamped: bool,
}

pub const DEFAULT_CALIBRATION_MC: usize = 400_000;

/// ε with n·mass(ε) ≈ target_lambda, by bisection in log ε over (0, 1/2].
///
/// When n·mass(1/2) < target the largest admissible ε is returned if it still reaches
/// target/2; below that the calibration fails.
pub fn choose_eps(n: usize, d: usize, alpha: f64, target_lambda: f64, seed: SeedSpec) -> Result<EpsChoice> {
    let est = CapMassEstimator::new(d, alpha, DEFAULT_CALIBRATION_MC, seed)?;
    choose_eps_with(&est, n, target_lambda)
}

pub fn choose_eps_with(est: &CapMassEstimator, n: usize, target_lambda: f64) -> Result<EpsChoice> {
    if n < 10 {
        return Err(Error::Domain(format!("calibration needs n >= 10, got {n}")));
    }
    if !(target_lambda > 0.0 && target_lambda.is_finite()) {
        return Err(Error::Domain(format!("target lambda must be positive, got {target_lambda}")));
    }
    let lam = |e: f64| n as f64 * est.mass(e);
    let top = lam(0.5);
    if top < target_lambda {
        if top >= 0.5 * target_lambda {
            return Ok(EpsChoice {
                eps: 0.5,
                lambda_hat: top,
                clamped: true,
            });
        }
        return Err(Error::Calibration(format!(
            "n={n}: n·mass(1/2) = {top:.4} cannot reach lambda={target_lambda}"
        )));
    }
    let (mut lo, mut hi) = (1e-6f64.ln(), 0.5f64.ln());
    if lam(lo.exp()) > target_lambda {
        return Err(Error::Calibration(format!("n={n}: lambda exceeds target even at eps=1e-6")));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if lam(mid.exp()) < target_lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps = hi.exp();
    Ok(EpsChoice {
        eps,
        lambda_hat: lam(eps),
        clamped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_values() {
        let u = [0.0, 1.0, 0.0];
        assert!((atom_eval(&u, 0.3, &u, false) - 0.09).abs() < 1e-15);
        assert!((atom_eval(&u, 0.3, &u, true) - 1.0).abs() < 1e-12);
        assert_eq!(atom_eval(&u, 0.3, &[0.0, 0.9, 0.0], true), 0.0);
    }

    #[test]
    fn estimator_agrees_with_plain_monte_carlo() {
        let est = CapMassEstimator::new(4, 1.0, 400_000, SeedSpec::new(3, 0)).unwrap();
        for eps in [0.3, 0.4, 0.5] {
            let e = est.estimate(eps).unwrap();
            let (p, se) = cap_mass_naive(4, 1.0, eps, 1_000_000, SeedSpec::new(3, 1));
            let tol = 3.0 * (se * se + e.mass_stderr * e.mass_stderr).sqrt();
            assert!((e.mass - p).abs() <= tol, "eps={eps}: {} vs {p} (tol {tol})", e.mass);
        }
    }

    #[test]
    fn mass_below_annulus_probability() {
        let est = CapMassEstimator::new(4, 1.0, 100_000, SeedSpec::new(4, 0)).unwrap();
        for eps in [0.05, 0.1, 0.2, 0.4] {
            assert!(est.mass(eps) <= eps * eps);
        }
    }

    #[test]
    fn calibration_monotone_in_n() {
        let est = CapMassEstimator::new(4, 1.0, 100_000, SeedSpec::new(5, 0)).unwrap();
        let a = choose_eps_with(&est, 1000, 1.0).unwrap();
        let b = choose_eps_with(&est, 2000, 1.0).unwrap();
        assert!(b.eps < a.eps);
        assert!((a.lambda_hat - 1.0).abs() < 1e-6);
        let small = choose_eps_with(&est, 100, 1.0).unwrap();
        assert!(small.clamped && small.lambda_hat >= 0.5);
        assert!(matches!(choose_eps_with(&est, 10, 1.0), Err(Error::Calibration(_))));
    }
}
