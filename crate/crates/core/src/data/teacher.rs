use ndarray::{Array1, Array2, ArrayView2};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::model::Network;
use crate::numerics::{standard_normal_vec, SeedSpec};
use crate::{Error, Result};

/// Ground-truth regression function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Teacher {
    ReluNet { net: Network },
    /// f(x) = xᵀAx + bᵀx + c with A symmetric.
    Quadratic { a: Array2<f64>, b: Array1<f64>, c: f64 },
}

impl Teacher {
    /// A = sym(G)/√d and b = g/√d for Gaussian G, g; c = 0.
    pub fn random_quadratic(d: usize, seed: SeedSpec) -> Self {
        let mut rng = seed.rng();
        let s = 1.0 / (d as f64).sqrt();
        let g = Array2::from_shape_vec((d, d), standard_normal_vec(&mut rng, d * d)).expect("d*d entries");
        let a = (&g + &g.t()) * (0.5 * s);
        let b = Array1::from(standard_normal_vec(&mut rng, d)) * s;
        Teacher::Quadratic { a, b, c: 0.0 }
    }

    /// Random ReLU network teacher using the standard initialization with the given scale.
    pub fn random_relu(d: usize, width: usize, scale: f64, seed: SeedSpec) -> Result<Self> {
        Ok(Teacher::ReluNet {
            net: Network::init(d, width, scale, true, seed)?,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Teacher::ReluNet { net } => net.dim(),
            Teacher::Quadratic { b, .. } => b.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Teacher::ReluNet { net } => net.validate(),
            Teacher::Quadratic { a, b, c } => {
                let d = b.len();
                if a.dim() != (d, d) {
                    return Err(Error::Spec(format!("quadratic teacher: A is {:?}, b has length {d}", a.dim())));
                }
                if a.iter().chain(b.iter()).any(|v| !v.is_finite()) || !c.is_finite() {
                    return Err(Error::Numeric("quadratic teacher has non-finite coefficients".into()));
                }
                let asym = a.iter().zip(a.t().iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                if asym > 1e-12 * (1.0 + a.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
                    return Err(Error::Spec("quadratic teacher: A is not symmetric".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::Arity(format!(
                "teacher expects dimension {}, features have {}",
                self.dim(),
                x.ncols()
            )));
        }
        match self {
            Teacher::ReluNet { net } => net.forward(x),
            Teacher::Quadratic { a, b, c } => {
                let ax = x.dot(a);
                Ok((&ax * &x).sum_axis(ndarray::Axis(1)) + x.dot(b) + *c)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherSpec {
    pub teacher: Teacher,
    pub noise_sigma: f64,
}

/// Teacher values and noisy labels y = f(x) + σ·ξ.
pub fn gen_labels(
    teacher: &TeacherSpec,
    features: ArrayView2<'_, f64>,
    seed: SeedSpec,
) -> Result<(Array1<f64>, Array1<f64>)> {
    teacher.teacher.validate()?;
    if !(teacher.noise_sigma.is_finite() && teacher.noise_sigma >= 0.0) {
        return Err(Error::Domain(format!("noise sigma must be >= 0, got {}", teacher.noise_sigma)));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("features contain non-finite values".into()));
    }
    let clean = teacher.teacher.eval(features)?;
    let noise = Normal::new(0.0, teacher.noise_sigma).expect("sigma checked");
    let mut rng = seed.rng();
    let labels = clean.mapv(|f| f + noise.sample(&mut rng));
    Ok((labels, clean))
}

/// Attach teacher labels (and clean values) to a dataset.
pub fn label_dataset(data: Dataset, teacher: &TeacherSpec, seed: SeedSpec) -> Result<Dataset> {
    let (labels, clean) = gen_labels(teacher, data.features(), seed)?;
    data.with_labels(labels, Some(clean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sample_features, DistSpec};
    use ndarray::{array, Array2};

    #[test]
    fn constant_quadratic() {
        let t = TeacherSpec {
            teacher: Teacher::Quadratic {
                a: Array2::zeros((3, 3)),
                b: Array1::zeros(3),
                c: 3.0,
            },
            noise_sigma: 0.0,
        };
        let x = Array2::from_elem((4, 3), 0.3);
        let (y, clean) = gen_labels(&t, x.view(), SeedSpec::default()).unwrap();
        assert!(y.iter().chain(clean.iter()).all(|&v| v == 3.0));
    }

    #[test]
    fn single_relu_teacher() {
        let net = Network::new(array![[1.0, 0.0, 0.0]], array![0.0], array![1.0], 0.0, true).unwrap();
        let t = TeacherSpec {
            teacher: Teacher::ReluNet { net },
            noise_sigma: 0.0,
        };
        let (_, clean) = gen_labels(&t, array![[0.7, 0.0, 0.0]].view(), SeedSpec::default()).unwrap();
        assert!((clean[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn noise_variance_matches_sigma() {
        let d = 6;
        let ds = sample_features(&DistSpec::Ball { d }, 10_000, SeedSpec::new(5, 0)).unwrap();
        let t = TeacherSpec {
            teacher: Teacher::random_quadratic(d, SeedSpec::new(5, 1)),
            noise_sigma: 1.0,
        };
        let ds = label_dataset(ds, &t, SeedSpec::new(5, 2)).unwrap();
        let diff = &ds.labels() - &ds.clean_labels().unwrap();
        let mean = diff.mean().unwrap();
        let var = diff.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (diff.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn quadratic_matches_double_loop() {
        let d = 4;
        let t = Teacher::random_quadratic(d, SeedSpec::new(9, 9));
        let Teacher::Quadratic { a, b, c } = &t else { unreachable!() };
        let x = array![[0.1, -0.2, 0.3, 0.4], [1.0, 0.5, -0.5, 0.0]];
        let got = t.eval(x.view()).unwrap();
        for i in 0..2 {
            let mut f = *c;
            for p in 0..d {
                f += b[p] * x[[i, p]];
                for q in 0..d {
                    f += x[[i, p]] * a[[p, q]] * x[[i, q]];
                }
            }
            assert!((got[i] - f).abs() < 1e-12);
        }
    }
}
