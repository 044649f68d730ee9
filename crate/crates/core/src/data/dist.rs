use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::numerics::{gram_schmidt, normalize, standard_normal_vec, uniform_in_ball, unit_vector, SeedSpec};
use crate::{Error, Result};

/// Mixture of uniform distributions on unit m-balls inside J random m-dimensional subspaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub d: usize,
    pub m: usize,
    /// Mixing probabilities; the number of components is `probs.len()`.
    pub probs: Vec<f64>,
    pub subspace_seed: u64,
    #[serde(default)]
    pub affine_offsets: bool,
}

impl MixtureSpec {
    /// `j` components with equal weight.
    pub fn uniform(d: usize, m: usize, j: usize, subspace_seed: u64) -> Self {
        Self {
            d,
            m,
            probs: vec![1.0 / j as f64; j],
            subspace_seed,
            affine_offsets: false,
        }
    }

    pub fn components(&self) -> usize {
        self.probs.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    /// X = h(R)·U with h(r) = 1 − (1 − r)^{1/α}; ||X|| ~ Beta(1, α).
    BetaRadial { d: usize, alpha: f64 },
    MixtureBalls(MixtureSpec),
    Sphere { d: usize },
    Ball { d: usize },
    Gaussian { d: usize },
}

impl DistSpec {
    pub fn dim(&self) -> usize {
        match self {
            DistSpec::BetaRadial { d, .. }
            | DistSpec::Sphere { d }
            | DistSpec::Ball { d }
            | DistSpec::Gaussian { d } => *d,
            DistSpec::MixtureBalls(m) => m.d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::Spec("dimension must be positive".into()));
        }
        match self {
            DistSpec::BetaRadial { alpha, .. } if !(alpha.is_finite() && *alpha > 0.0) => {
                Err(Error::Spec(format!("alpha must be positive and finite, got {alpha}")))
            }
            DistSpec::MixtureBalls(mix) => {
                if mix.m == 0 || mix.m > mix.d {
                    return Err(Error::Spec(format!("need 1 <= m <= d, got m={} d={}", mix.m, mix.d)));
                }
                if mix.probs.is_empty() {
                    return Err(Error::Spec("mixture needs at least one component".into()));
                }
                if mix.probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
                    return Err(Error::Spec("mixture probabilities must be positive".into()));
                }
                let total: f64 = mix.probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::Spec(format!("mixture probabilities sum to {total}, not 1")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Short label used in tables and file names.
    pub fn label(&self) -> String {
        match self {
            DistSpec::BetaRadial { d, alpha } => format!("beta_radial(d={d},alpha={alpha})"),
            DistSpec::MixtureBalls(m) => format!("mixture(d={},m={},J={})", m.d, m.m, m.components()),
            DistSpec::Sphere { d } => format!("sphere(d={d})"),
            DistSpec::Ball { d } => format!("ball(d={d})"),
            DistSpec::Gaussian { d } => format!("gaussian(d={d})"),
        }
    }
}

/// Radius of a Beta-radial sample from a uniform draw `r` in [0, 1).
pub fn beta_radial_radius(r: f64, alpha: f64) -> f64 {
    1.0 - (1.0 - r).powf(1.0 / alpha)
}

#[derive(Debug, Clone)]
struct Component {
    /// Orthonormal basis, m vectors of length d.
    basis: Vec<Vec<f64>>,
    offset: Option<Vec<f64>>,
}

/// A validated distribution with its subspaces materialized; draws one point at a time.
#[derive(Debug, Clone)]
pub struct FeatureSampler {
    spec: DistSpec,
    components: Vec<Component>,
    cumulative: Vec<f64>,
}

impl FeatureSampler {
    pub fn new(spec: &DistSpec) -> Result<Self> {
        spec.validate()?;
        let mut components = Vec::new();
        let mut cumulative = Vec::new();
        if let DistSpec::MixtureBalls(mix) = spec {
            let root = SeedSpec::from_master(mix.subspace_seed);
            for j in 0..mix.components() {
                let mut rng = root.child(j as u64).rng();
                // Redraw on the (probability zero) event of a rank-deficient Gaussian matrix.
                let basis = loop {
                    let cols: Vec<Vec<f64>> =
                        (0..mix.m).map(|_| standard_normal_vec(&mut rng, mix.d)).collect();
                    let basis = gram_schmidt(&cols);
                    if basis.len() == mix.m {
                        break basis;
                    }
                };
                let offset = mix.affine_offsets.then(|| {
                    let mut o = standard_normal_vec(&mut rng, mix.d);
                    for q in &basis {
                        let c: f64 = o.iter().zip(q).map(|(a, b)| a * b).sum();
                        o.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
                    }
                    let len = 0.5 * rng.random::<f64>();
                    if normalize(&mut o) > 0.0 {
                        o.iter_mut().for_each(|a| *a *= len);
                    }
                    o
                });
                components.push(Component { basis, offset });
            }
            let mut acc = 0.0;
            for p in &mix.probs {
                acc += p;
                cumulative.push(acc);
            }
        }
        Ok(Self {
            spec: spec.clone(),
            components,
            cumulative,
        })
    }

    pub fn spec(&self) -> &DistSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Orthonormal basis of mixture component `j` (empty for non-mixture specs).
    pub fn subspace_basis(&self, j: usize) -> &[Vec<f64>] {
        self.components.get(j).map_or(&[], |c| &c.basis)
    }

    pub fn offset(&self, j: usize) -> Option<&[f64]> {
        self.components.get(j).and_then(|c| c.offset.as_deref())
    }

    /// Draw one point into `out`; returns the mixture component for mixture specs.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Option<usize> {
        match &self.spec {
            DistSpec::BetaRadial { d, alpha } => {
                let u = unit_vector(rng, *d);
                let r = beta_radial_radius(rng.random::<f64>(), *alpha);
                out.iter_mut().zip(&u).for_each(|(o, x)| *o = r * x);
                None
            }
            DistSpec::Sphere { d } => {
                out.copy_from_slice(&unit_vector(rng, *d));
                None
            }
            DistSpec::Ball { d } => {
                out.copy_from_slice(&uniform_in_ball(rng, *d));
                None
            }
            DistSpec::Gaussian { d } => {
                out.copy_from_slice(&standard_normal_vec(rng, *d));
                None
            }
            DistSpec::MixtureBalls(_) => {
                let u: f64 = rng.random();
                let j = self
                    .cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(self.cumulative.len() - 1);
                self.sample_component_into(j, rng, out);
                Some(j)
            }
        }
    }

    /// Draw from mixture component `j` conditionally. Panics for non-mixture specs.
    pub fn sample_component_into<R: Rng + ?Sized>(&self, j: usize, rng: &mut R, out: &mut [f64]) {
        let comp = &self.components[j];
        let m = comp.basis.len();
        loop {
            let coef = uniform_in_ball(rng, m);
            out.iter_mut().for_each(|o| *o = 0.0);
            if let Some(off) = &comp.offset {
                out.copy_from_slice(off);
            }
            for (c, q) in coef.iter().zip(&comp.basis) {
                out.iter_mut().zip(q).for_each(|(o, qi)| *o += c * qi);
            }
            if comp.offset.is_none() || out.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                return;
            }
        }
    }

    /// n points as a feature-only dataset (component indices attached for mixtures).
    pub fn sample(&self, n: usize, seed: SeedSpec) -> Result<Dataset> {
        let d = self.dim();
        let mut rng = seed.rng();
        let mut x = Array2::zeros((n, d));
        let mut comps = Vec::with_capacity(n);
        for mut row in x.rows_mut() {
            let slice = row.as_slice_mut().expect("standard layout");
            if let Some(j) = self.sample_into(&mut rng, slice) {
                comps.push(j);
            }
        }
        let ds = Dataset::features_only(x)?;
        if matches!(self.spec, DistSpec::MixtureBalls(_)) {
            ds.with_components(comps)
        } else {
            Ok(ds)
        }
    }
}

/// n i.i.d. draws from `spec`.
pub fn sample_features(spec: &DistSpec, n: usize, seed: SeedSpec) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Arity("need at least one sample".into()));
    }
    FeatureSampler::new(spec)?.sample(n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_radial_alpha_one_mean_radius() {
        let ds = sample_features(&DistSpec::BetaRadial { d: 5, alpha: 1.0 }, 100_000, SeedSpec::new(1, 0)).unwrap();
        let mean = ds.features().rows().into_iter().map(|r| r.dot(&r).sqrt()).sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn beta_radial_tail_law() {
        let ds = sample_features(&DistSpec::BetaRadial { d: 5, alpha: 2.0 }, 100_000, SeedSpec::new(2, 0)).unwrap();
        let norms: Vec<f64> = ds.features().rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
        for t in [0.2, 0.5, 0.8] {
            let p = norms.iter().filter(|&&r| r > 1.0 - t).count() as f64 / norms.len() as f64;
            assert!((p - t * t).abs() < 0.01, "t={t} p={p}");
        }
    }

    #[test]
    fn mixture_points_lie_on_their_lines() {
        let spec = DistSpec::MixtureBalls(MixtureSpec::uniform(10, 1, 20, 7));
        let sampler = FeatureSampler::new(&spec).unwrap();
        let ds = sampler.sample(1000, SeedSpec::new(3, 0)).unwrap();
        let comps = ds.component().unwrap();
        for (row, &j) in ds.features().rows().into_iter().zip(comps) {
            let q = &sampler.subspace_basis(j)[0];
            let c: f64 = row.iter().zip(q).map(|(a, b)| a * b).sum();
            let resid: f64 = row.iter().zip(q).map(|(a, b)| (a - c * b).powi(2)).sum::<f64>().sqrt();
            assert!(resid < 1e-10);
            assert!(c.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn affine_mixture_stays_in_ball() {
        let mut mix = MixtureSpec::uniform(6, 2, 3, 11);
        mix.affine_offsets = true;
        let ds = sample_features(&DistSpec::MixtureBalls(mix), 2000, SeedSpec::new(4, 0)).unwrap();
        assert!(ds.radius() <= 1.0);
    }

    #[test]
    fn spec_errors() {
        let bad_m = DistSpec::MixtureBalls(MixtureSpec::uniform(3, 4, 2, 0));
        assert!(matches!(sample_features(&bad_m, 5, SeedSpec::default()), Err(Error::Spec(_))));
        let mut mix = MixtureSpec::uniform(3, 1, 2, 0);
        mix.probs = vec![0.5, 0.6];
        assert!(matches!(
            sample_features(&DistSpec::MixtureBalls(mix), 5, SeedSpec::default()),
            Err(Error::Spec(_))
        ));
        assert!(sample_features(&DistSpec::BetaRadial { d: 3, alpha: 0.0 }, 5, SeedSpec::default()).is_err());
    }

    #[test]
    fn spec_roundtrips_through_json() {
        let spec = DistSpec::MixtureBalls(MixtureSpec::uniform(10, 1, 20, 7));
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<DistSpec>(&s).unwrap(), spec);
    }
}
