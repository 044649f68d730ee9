use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::{dot, unit_vector, SeedSpec};
use crate::{Error, Result};

/// Disjoint caps C(u, ε) = {x : u·x > 1 − ε²} on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapPacking {
    pub d: usize,
    pub eps: f64,
    /// Angular radius arccos(1 − ε²).
    pub theta: f64,
    pub centers: Vec<Vec<f64>>,
}

impl CapPacking {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn level(&self) -> f64 {
        1.0 - self.eps * self.eps
    }

    /// Index of the cap containing x, if any. Caps are disjoint so there is at most one.
    pub fn cap_of(&self, x: &[f64]) -> Option<usize> {
        let level = self.level();
        self.centers.iter().position(|u| dot(u, x) > level)
    }

    /// Number of caps containing x (0 or 1 for a valid packing).
    pub fn caps_containing(&self, x: &[f64]) -> usize {
        let level = self.level();
        self.centers.iter().filter(|u| dot(u, x) > level).count()
    }

    /// Smallest pairwise angle between centers (π for fewer than two caps).
    pub fn min_angle(&self) -> f64 {
        let mut best = std::f64::consts::PI;
        for i in 0..self.centers.len() {
            for j in (i + 1)..self.centers.len() {
                let c = dot(&self.centers[i], &self.centers[j]).clamp(-1.0, 1.0);
                best = best.min(c.acos());
            }
        }
        best
    }
}

/// Γ(d/2)/(√π·Γ((d−1)/2)): density constant of u·X for X uniform on S^{d−1}.
pub fn sphere_cosine_constant(d: usize) -> f64 {
    assert!(d >= 2, "cosine density needs d >= 2");
    let mut c = if d % 2 == 0 { 1.0 / std::f64::consts::PI } else { 0.5 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k < d {
        c *= k as f64 / (k - 1) as f64;
        k += 2;
    }
    c
}

/// Fraction of the sphere S^{d−1} covered by a cap of angular radius θ.
pub fn cap_area_fraction(d: usize, theta: f64) -> f64 {
    if d == 1 {
        return if theta > 0.0 { 0.5 } else { 0.0 };
    }
    // Composite Simpson on sin^{d−2}.
    let m = 2000;
    let h = theta / m as f64;
    let f = |phi: f64| phi.sin().powi(d as i32 - 2);
    let mut acc = f(0.0) + f(theta);
    for i in 1..m {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sphere_cosine_constant(d) * acc * h / 3.0
}

/// Area-based upper estimate of how many disjoint caps of scale ε fit.
pub fn expected_cap_count(d: usize, eps: f64) -> f64 {
    let theta = (1.0 - eps * eps).acos();
    1.0 / cap_area_fraction(d, theta)
}

/// Greedy random packing of disjoint caps of scale ε.
///
/// Candidates are uniform on the sphere and accepted when at angle ≥ 2θ from every
/// accepted center; the search stops after `max_attempts` consecutive rejections
/// (default 10 × the area bound). On the circle the optimal packing is known and is
/// used directly: floor(π/θ) equally spaced centers with a seeded rotation.
pub fn pack_caps(d: usize, eps: f64, seed: SeedSpec, max_attempts: Option<usize>) -> Result<CapPacking> {
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Domain(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    let theta = (1.0 - eps * eps).acos();
    let mut rng = seed.rng();
    if d == 2 {
        let n = ((std::f64::consts::PI / theta) * (1.0 + 1e-12)).floor() as usize;
        let offset: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        let centers = (0..n)
            .map(|i| {
                let a = offset + std::f64::consts::TAU * i as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        return Ok(CapPacking { d, eps, theta, centers });
    }
    let limit = max_attempts.unwrap_or_else(|| (10.0 * expected_cap_count(d, eps)).ceil() as usize).max(1);
    let cos2 = (2.0 * theta).cos();
    let mut centers: Vec<Vec<f64>> = vec![unit_vector(&mut rng, d)];
    let mut misses = 0;
    while misses < limit {
        let c = unit_vector(&mut rng, d);
        if centers.iter().all(|u| dot(u, &c) <= cos2) {
            centers.push(c);
            misses = 0;
        } else {
            misses += 1;
        }
    }
    Ok(CapPacking { d, eps, theta, centers })
}
