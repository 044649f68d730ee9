use super::linalg::{dot, normalize, unit_vector};
use super::SeedSpec;
use crate::{Error, Result};

/// Rayleigh quotients below this magnitude after the first step count as a stall
/// (start vector orthogonal to the dominant eigenspace) and trigger one restart.
pub const STALL_THRESHOLD: f64 = 1e-14;

const FLUSH_BELOW: f64 = 1e-150;

#[derive(Debug, Clone)]
pub struct PowerIteration {
    /// Rayleigh quotient at the final iterate. Signed: for an indefinite
    /// operator this is the eigenvalue of largest magnitude.
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarted: bool,
    pub eigenvector: Vec<f64>,
}

/// Power iteration for the dominant eigenvalue of a symmetric operator.
///
/// `matvec(x, out)` must write `A x` into `out`. Iteration stops when the relative
/// change of successive Rayleigh quotients drops below `tol` or after `max_iter`
/// products, in which case `converged` is false and the last estimate is returned.
pub fn power_iteration<F>(
    mut matvec: F,
    dim: usize,
    tol: f64,
    max_iter: usize,
    seed: SeedSpec,
) -> Result<PowerIteration>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Err(Error::Arity("power iteration on a zero-dimensional operator".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut rng = seed.rng();
    let mut v = unit_vector(&mut rng, dim);
    let mut w = vec![0.0; dim];
    let mut prev: Option<f64> = None;
    let mut restarted = false;
    let mut lambda = 0.0;

    let mut it = 0;
    while it < max_iter {
        it += 1;
        matvec(&v, &mut w);
        lambda = dot(&v, &w);
        if !lambda.is_finite() || w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite value in power iteration at step {it}"
            )));
        }
        if prev.is_none() && lambda.abs() < STALL_THRESHOLD {
            if restarted {
                // A second stall from an independent start: the operator is zero
                // to working precision.
                return Ok(PowerIteration {
                    eigenvalue: lambda,
                    iterations: it,
                    converged: true,
                    restarted,
                    eigenvector: v,
                });
            }
            restarted = true;
            v = unit_vector(&mut seed.child(1).rng(), dim);
            continue;
        }
        if let Some(p) = prev {
            if (lambda - p).abs() / lambda.abs().max(1e-12) <= tol {
                return Ok(PowerIteration {
                    eigenvalue: lambda,
                    iterations: it,
                    converged: true,
                    restarted,
                    eigenvector: v,
                });
            }
        }
        prev = Some(lambda);
        v.copy_from_slice(&w);
        let scale = normalize(&mut v);
        // Components that decayed this far cannot move the Rayleigh quotient,
        // and left alone they turn subnormal and slow every later product.
        v.iter_mut().filter(|x| x.abs() < FLUSH_BELOW).for_each(|x| *x = 0.0);
        if scale == 0.0 {
            return Ok(PowerIteration {
                eigenvalue: 0.0,
                iterations: it,
                converged: true,
                restarted,
                eigenvector: w,
            });
        }
    }
    Ok(PowerIteration {
        eigenvalue: lambda,
        iterations: it,
        converged: false,
        restarted,
        eigenvector: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::standard_normal_vec;

    fn dense(a: &[Vec<f64>]) -> impl FnMut(&[f64], &mut [f64]) + '_ {
        move |x, out| {
            for (o, row) in out.iter_mut().zip(a) {
                *o = dot(row, x);
            }
        }
    }

    #[test]
    fn diagonal_spectrum() {
        let a = vec![vec![3.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]];
        let r = power_iteration(dense(&a), 3, 1e-12, 10_000, SeedSpec::new(1, 0)).unwrap();
        assert!(r.converged);
        assert!((r.eigenvalue - 3.0).abs() < 1e-9);
    }

    #[test]
    fn rank_one() {
        let v = [1.0, 2.0, 1.0, 1.0]; // |v|^2 = 7
        let a: Vec<Vec<f64>> = v.iter().map(|x| v.iter().map(|y| x * y).collect()).collect();
        let r = power_iteration(dense(&a), 4, 1e-12, 1000, SeedSpec::new(2, 0)).unwrap();
        assert!((r.eigenvalue - 7.0).abs() < 1e-9);
    }

    #[test]
    fn zero_operator_restarts_once() {
        let r = power_iteration(|_, out: &mut [f64]| out.fill(0.0), 5, 1e-8, 100, SeedSpec::new(3, 0)).unwrap();
        assert!(r.restarted);
        assert!(r.converged);
        assert_eq!(r.eigenvalue, 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            power_iteration(|_, _: &mut [f64]| {}, 0, 1e-8, 10, SeedSpec::default()),
            Err(Error::Arity(_))
        ));
        assert!(matches!(
            power_iteration(|_, out: &mut [f64]| out.fill(f64::NAN), 3, 1e-8, 10, SeedSpec::default()),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn scaling_scales_estimate() {
        let mut rng = SeedSpec::new(4, 0).rng();
        let b: Vec<Vec<f64>> = (0..6).map(|_| standard_normal_vec(&mut rng, 6)).collect();
        // A = B^T B is PSD
        let a: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|j| (0..6).map(|k| b[k][i] * b[k][j]).sum()).collect())
            .collect();
        let ca: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| 2.5 * x).collect()).collect();
        let r1 = power_iteration(dense(&a), 6, 1e-12, 100_000, SeedSpec::new(5, 0)).unwrap();
        let r2 = power_iteration(dense(&ca), 6, 1e-12, 100_000, SeedSpec::new(5, 0)).unwrap();
        assert!((r2.eigenvalue / r1.eigenvalue - 2.5).abs() < 1e-8);
    }
}
