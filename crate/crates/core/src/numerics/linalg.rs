use rand::Rng;
use rand_distr::StandardNormal;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scale `a` to unit length in place and return its previous norm.
pub fn normalize(a: &mut [f64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
    n
}

pub fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform point on the unit sphere in R^dim (normalized Gaussian).
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let mut v = standard_normal_vec(rng, dim);
        if normalize(&mut v) > 1e-300 {
            return v;
        }
    }
}

/// Uniform point in the unit ball of R^dim: uniform direction times U^(1/dim).
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    let mut v = unit_vector(rng, dim);
    let r = rng.random::<f64>().powf(1.0 / dim as f64);
    v.iter_mut().for_each(|x| *x *= r);
    v
}

/// Modified Gram-Schmidt on the given vectors, returning an orthonormal list.
/// Vectors that are numerically dependent on their predecessors are dropped.
pub fn gram_schmidt(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        if normalize(&mut w) > 1e-10 * norm(v).max(1e-300) {
            basis.push(w);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeedSpec;

    #[test]
    fn gram_schmidt_is_orthonormal() {
        let mut rng = SeedSpec::new(1, 0).rng();
        let vs: Vec<Vec<f64>> = (0..4).map(|_| standard_normal_vec(&mut rng, 7)).collect();
        let q = gram_schmidt(&vs);
        assert_eq!(q.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&q[i], &q[j]) - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gram_schmidt_drops_dependent_vectors() {
        let vs = vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert_eq!(gram_schmidt(&vs).len(), 2);
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = SeedSpec::new(2, 0).rng();
        for _ in 0..1000 {
            assert!(norm(&uniform_in_ball(&mut rng, 3)) <= 1.0);
            assert!((norm(&unit_vector(&mut rng, 5)) - 1.0).abs() < 1e-14);
        }
    }
}
