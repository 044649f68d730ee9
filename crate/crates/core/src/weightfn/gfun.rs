use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

/// A direction on the unit sphere and a threshold: the half-space {x : u·x > t}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionThreshold {
    u: Vec<f64>,
    t: f64,
}

impl DirectionThreshold {
    pub fn new(u: Vec<f64>, t: f64) -> Result<Self> {
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 || !t.is_finite() {
            return Err(Error::Domain(format!("direction must be a unit vector (norm {norm}), threshold finite")));
        }
        Ok(Self { u, t })
    }

    /// Normalized (w/||w||, b/||w||) of a neuron; also returns ||w||.
    pub fn from_neuron(w: &[f64], b: f64) -> Result<(Self, f64)> {
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Model("neuron with zero weight vector".into()));
        }
        let mut u: Vec<f64> = w.iter().map(|x| x / norm).collect();
        // One correction step keeps ||u|| = 1 to the last bit.
        let r = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        u.iter_mut().for_each(|x| *x /= r);
        Ok((Self { u, t: b / norm }, norm))
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// (−u, −t)
    pub fn flipped(&self) -> Self {
        Self {
            u: self.u.iter().map(|x| -x).collect(),
            t: -self.t,
        }
    }
}

/// Intermediate quantities of one branch g̃(u, t) = p²·e·s.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GParts {
    /// Fraction of samples with u·x > t.
    pub p: f64,
    /// Mean margin u·x − t over the active set.
    pub e: f64,
    /// sqrt(1 + ||mean of active x||²)
    pub s: f64,
    pub g: f64,
}

impl GParts {
    /// From active count, margin sum and the sum of active points. Empty active set gives zeros.
    pub fn from_sums(count: f64, total: f64, margin_sum: f64, x_sum: &[f64]) -> Self {
        if count <= 0.0 || total <= 0.0 {
            return Self::default();
        }
        let p = count / total;
        let e = margin_sum / count;
        let m2: f64 = x_sum.iter().map(|x| (x / count).powi(2)).sum();
        let s = (1.0 + m2).sqrt();
        Self { p, e, s, g: p * p * e * s }
    }
}

/// Both branches of g and their minimum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GValue {
    pub plus: GParts,
    pub minus: GParts,
    pub value: f64,
}

impl GValue {
    pub fn from_parts(plus: GParts, minus: GParts) -> Self {
        Self {
            plus,
            minus,
            value: plus.g.min(minus.g),
        }
    }
}

/// Raw sums behind both branches of g; additive over disjoint samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSums {
    pub total: f64,
    pub count_plus: f64,
    pub margin_plus: f64,
    pub x_plus: Vec<f64>,
    pub count_minus: f64,
    pub margin_minus: f64,
    pub x_minus: Vec<f64>,
}

impl BranchSums {
    pub fn zeros(d: usize) -> Self {
        Self {
            total: 0.0,
            count_plus: 0.0,
            margin_plus: 0.0,
            x_plus: vec![0.0; d],
            count_minus: 0.0,
            margin_minus: 0.0,
            x_minus: vec![0.0; d],
        }
    }

    pub fn from_rows(x: ArrayView2<'_, f64>, q: &DirectionThreshold) -> Self {
        let mut acc = Self::zeros(x.ncols());
        for row in x.rows() {
            let row = row.as_slice().expect("standard layout");
            acc.push(row, row.iter().zip(&q.u).map(|(a, b)| a * b).sum(), q.t);
        }
        acc
    }

    /// Add one point with projection `proj` onto the probe direction.
    pub fn push(&mut self, x: &[f64], proj: f64, t: f64) {
        self.total += 1.0;
        if proj > t {
            self.count_plus += 1.0;
            self.margin_plus += proj - t;
            self.x_plus.iter_mut().zip(x).for_each(|(s, xi)| *s += xi);
        } else if proj < t {
            self.count_minus += 1.0;
            self.margin_minus += t - proj;
            self.x_minus.iter_mut().zip(x).for_each(|(s, xi)| *s += xi);
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.total += other.total;
        self.count_plus += other.count_plus;
        self.margin_plus += other.margin_plus;
        self.count_minus += other.count_minus;
        self.margin_minus += other.margin_minus;
        self.x_plus.iter_mut().zip(&other.x_plus).for_each(|(a, b)| *a += b);
        self.x_minus.iter_mut().zip(&other.x_minus).for_each(|(a, b)| *a += b);
    }

    pub fn value(&self) -> GValue {
        GValue::from_parts(
            GParts::from_sums(self.count_plus, self.total, self.margin_plus, &self.x_plus),
            GParts::from_sums(self.count_minus, self.total, self.margin_minus, &self.x_minus),
        )
    }
}

/// g at (u, t) under the empirical measure of the rows of `x`, with both branches.
pub fn g_detail(x: ArrayView2<'_, f64>, q: &DirectionThreshold) -> GValue {
    BranchSums::from_rows(x, q).value()
}

/// min{g̃(u,t), g̃(−u,−t)} under the empirical measure of the training inputs.
pub fn g_empirical(data: &Dataset, q: &DirectionThreshold) -> Result<f64> {
    if data.n() == 0 {
        return Err(Error::Arity("empty dataset".into()));
    }
    if q.u.len() != data.dim() {
        return Err(Error::Arity(format!("probe dimension {} vs data {}", q.u.len(), data.dim())));
    }
    Ok(g_detail(data.features(), q).value)
}

/// Exact g for many thresholds along one direction: sorts projections once and
/// answers each threshold with prefix sums.
#[derive(Debug, Clone)]
pub struct DirectionSweep {
    proj: Vec<f64>,
    prefix_proj: Vec<f64>,
    /// (N+1)×d prefix sums of points sorted by projection.
    prefix_x: Vec<f64>,
    d: usize,
}

impl DirectionSweep {
    pub fn new(x: ArrayView2<'_, f64>, u: &[f64]) -> Self {
        let (n, d) = x.dim();
        let raw: Vec<f64> = x.rows().into_iter().map(|r| r.iter().zip(u).map(|(a, b)| a * b).sum()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
        let mut proj = Vec::with_capacity(n);
        let mut prefix_proj = Vec::with_capacity(n + 1);
        let mut prefix_x = vec![0.0; (n + 1) * d];
        prefix_proj.push(0.0);
        for (pos, &i) in order.iter().enumerate() {
            proj.push(raw[i]);
            prefix_proj.push(prefix_proj[pos] + raw[i]);
            for j in 0..d {
                prefix_x[(pos + 1) * d + j] = prefix_x[pos * d + j] + x[[i, j]];
            }
        }
        Self {
            proj,
            prefix_proj,
            prefix_x,
            d,
        }
    }

    pub fn len(&self) -> usize {
        self.proj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proj.is_empty()
    }

    /// Branch sums at threshold t (direction fixed at construction).
    pub fn sums_at(&self, t: f64) -> BranchSums {
        let n = self.proj.len();
        let lo = self.proj.partition_point(|&p| p < t);
        let hi = self.proj.partition_point(|&p| p <= t);
        let d = self.d;
        let sum_x = |a: usize, b: usize| -> Vec<f64> {
            (0..d).map(|j| self.prefix_x[b * d + j] - self.prefix_x[a * d + j]).collect()
        };
        let count_plus = (n - hi) as f64;
        let count_minus = lo as f64;
        BranchSums {
            total: n as f64,
            count_plus,
            margin_plus: (self.prefix_proj[n] - self.prefix_proj[hi]) - count_plus * t,
            x_plus: sum_x(hi, n),
            count_minus,
            margin_minus: count_minus * t - self.prefix_proj[lo],
            x_minus: sum_x(0, lo),
        }
    }

    /// g at threshold t.
    pub fn at(&self, t: f64) -> GValue {
        self.sums_at(t).value()
    }
}
