use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordinary least-squares fit of `y = intercept + slope * x`.
///
/// For [`ols_loglog`] both coordinates are natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination. A constant response is reported as 1.
    pub r2: f64,
    /// Standard error of the slope; 0 for a constant response or an exact fit
    /// through two points.
    pub stderr: f64,
    pub n_points: usize,
}

/// Least-squares fit of `ln(ys)` against `ln(xs)`.
pub fn ols_loglog(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    check_arity(xs, ys)?;
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain(format!(
                "log-log fit needs strictly positive finite values, got (x, y) = ({x}, {y}) at index {i}"
            )));
        }
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let constant = ys.iter().all(|&y| y == ys[0]);
    fit(&lx, &ly, constant)
}

/// Plain least-squares line through `(xs, ys)`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    check_arity(xs, ys)?;
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Domain("least-squares fit needs finite values".into()));
    }
    let constant = ys.iter().all(|&y| y == ys[0]);
    fit(xs, ys, constant)
}

fn check_arity(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Arity(format!(
            "x and y lengths differ ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::Arity(format!(
            "a slope fit needs at least 3 points, got {}",
            xs.len()
        )));
    }
    Ok(())
}

fn fit(xs: &[f64], ys: &[f64], constant_response: bool) -> Result<SlopeFit> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("all x values coincide; slope is undefined".into()));
    }
    if constant_response {
        return Ok(SlopeFit {
            slope: 0.0,
            intercept: ys[0],
            r2: 1.0,
            stderr: 0.0,
            n_points: xs.len(),
        });
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let stderr = if xs.len() > 2 {
        (sse.max(0.0) / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
        stderr,
        n_points: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeedSpec;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn exact_power_law() {
        let f = ols_loglog(&[1.0, 2.0, 4.0], &[1.0, 4.0, 16.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15);
        assert!(f.intercept.abs() < 1e-15);
        assert!((f.r2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_series_convention() {
        let f = ols_loglog(&[1.0, 10.0, 100.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.r2, 1.0);
        assert_eq!(f.stderr, 0.0);
    }

    /// Normal equations for [1 x] b = y solved by Cramer's rule.
    fn normal_equations(xs: &[f64], ys: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sy: f64 = ys.iter().sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
        let det = n * sxx - sx * sx;
        ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det)
    }

    #[test]
    fn noisy_power_law_matches_normal_equations() {
        let mut rng = SeedSpec::new(2024, 0).rng();
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x: &f64| {
                let noise: f64 = rng.sample(StandardNormal);
                2.0 * x.powf(-1.5) * (1.0 + 0.01 * noise)
            })
            .collect();
        let f = ols_loglog(&xs, &ys).unwrap();
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let (slope, intercept) = normal_equations(&lx, &ly);
        assert!((f.slope - slope).abs() < 1e-12);
        assert!((f.intercept - intercept).abs() < 1e-12);
        assert!((f.slope + 1.5).abs() < 0.05, "slope {}", f.slope);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(ols_loglog(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::Arity(_))));
        assert!(matches!(ols_loglog(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]), Err(Error::Domain(_))));
        assert!(matches!(ols_loglog(&[-1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]), Err(Error::Domain(_))));
        assert!(matches!(ols_loglog(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(Error::Arity(_))));
    }

    proptest! {
        #[test]
        fn invariant_to_reordering(
            pts in proptest::collection::vec((0.01f64..100.0, 0.01f64..100.0), 3..20),
            seed in any::<u64>(),
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
            prop_assume!(xs.iter().any(|&x| (x - xs[0]).abs() > 1e-6));
            let a = ols_loglog(&xs, &ys).unwrap();
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            let mut rng = SeedSpec::from_master(seed).rng();
            for i in (1..idx.len()).rev() {
                idx.swap(i, rng.random_range(0..=i));
            }
            let xs2: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
            let ys2: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
            let b = ols_loglog(&xs2, &ys2).unwrap();
            prop_assert!((a.slope - b.slope).abs() <= 1e-9 * (1.0 + a.slope.abs()));
            prop_assert!((a.r2 - b.r2).abs() <= 1e-9);
            prop_assert!(a.r2 >= 0.0 && a.r2 <= 1.0 && a.stderr >= 0.0);
        }
    }
}
