//! Approximate Tukey depth: the smallest fraction of data in a closed half-space
//! {y : u·y ≥ u·x}, minimized over a finite set of directions.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::model::Network;
use crate::numerics::{dot, unit_vector, SeedSpec};
use crate::{Error, Result};

/// Data-point directions join the candidate set automatically up to this many samples.
pub const DATA_DIRECTION_LIMIT: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataDirections {
    /// Include x_i/||x_i|| when n ≤ 5000.
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthOptions {
    pub n_directions: usize,
    pub seed: SeedSpec,
    /// Count data points equal to the query.
    pub include_self: bool,
    pub data_directions: DataDirections,
}

impl Default for DepthOptions {
    fn default() -> Self {
        Self {
            n_directions: 512,
            seed: SeedSpec::new(0xde97, 0),
            include_self: true,
            data_directions: DataDirections::Auto,
        }
    }
}

/// Candidate directions with the data projected and sorted along each.
#[derive(Debug, Clone)]
pub struct DepthIndex<'a> {
    data: &'a Dataset,
    rows: Vec<Vec<f64>>,
    dirs: Vec<Vec<f64>>,
    sorted: Vec<Vec<f64>>,
    include_self: bool,
}

impl<'a> DepthIndex<'a> {
    pub fn new(data: &'a Dataset, opts: &DepthOptions) -> Result<Self> {
        if opts.n_directions == 0 {
            return Err(Error::Domain("need at least one direction".into()));
        }
        if data.n() == 0 {
            return Err(Error::Arity("empty dataset".into()));
        }
        let d = data.dim();
        let rows: Vec<Vec<f64>> = data.features().rows().into_iter().map(|r| r.to_vec()).collect();
        let mut rng = opts.seed.rng();
        let mut dirs: Vec<Vec<f64>> = (0..opts.n_directions).map(|_| unit_vector(&mut rng, d)).collect();
        let use_data = match opts.data_directions {
            DataDirections::Auto => data.n() <= DATA_DIRECTION_LIMIT,
            DataDirections::Always => true,
            DataDirections::Never => false,
        };
        if use_data {
            for r in &rows {
                let norm = dot(r, r).sqrt();
                if norm > 0.0 {
                    dirs.push(r.iter().map(|x| x / norm).collect());
                }
            }
        }
        let sorted = crate::par::map(dirs.clone(), |u| {
            let mut p: Vec<f64> = rows.iter().map(|r| dot(&u, r)).collect();
            p.sort_by(f64::total_cmp);
            p
        });
        Ok(Self {
            data,
            rows,
            dirs,
            sorted,
            include_self: opts.include_self,
        })
    }

    pub fn n_candidates(&self) -> usize {
        self.dirs.len()
    }

    /// Depth estimate of x: min over candidates of #{i : u·x_i ≥ u·x}/n.
    pub fn depth(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.data.dim() {
            return Err(Error::Arity(format!("point dimension {} vs data {}", x.len(), self.data.dim())));
        }
        let equal = if self.include_self {
            0
        } else {
            self.rows.iter().filter(|r| r.as_slice() == x).count()
        };
        let n = self.rows.len() - equal;
        if n == 0 {
            return Ok(0.0);
        }
        let mut best = usize::MAX;
        for (u, col) in self.dirs.iter().zip(&self.sorted) {
            let px = dot(u, x);
            let count = col.len() - col.partition_point(|&p| p < px);
            best = best.min(count - equal);
        }
        let norm = dot(x, x).sqrt();
        if norm > 0.0 {
            for sign in [1.0, -1.0] {
                let u: Vec<f64> = x.iter().map(|c| sign * c / norm).collect();
                let px = dot(&u, x);
                let count = self.rows.iter().filter(|r| dot(&u, r) >= px).count();
                best = best.min(count - equal);
            }
        }
        Ok(best as f64 / n as f64)
    }
}

/// Depth of one point with the candidate set described in [`DepthOptions`].
pub fn tukey_depth_approx(x: &[f64], data: &Dataset, opts: &DepthOptions) -> Result<f64> {
    DepthIndex::new(data, opts)?.depth(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthPoint {
    pub index: usize,
    pub depth: f64,
    /// (f̂(x_i) − clean_i)²
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quintile {
    pub quintile: usize,
    pub depth_lo: f64,
    pub depth_hi: f64,
    pub count: usize,
    pub mean_error: f64,
    pub median_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub points: Vec<DepthPoint>,
    pub n_directions: usize,
    pub seed: SeedSpec,
    pub quintiles: Vec<Quintile>,
    /// Rank correlation between depth and error.
    pub spearman: Option<f64>,
}

/// Depth of every training point against the training set, with squared errors of
/// `net` against the clean labels, quintile summaries and the rank correlation.
pub fn depth_error_scan(net: &Network, data: &Dataset, opts: &DepthOptions) -> Result<DepthReport> {
    let clean = data
        .clean_labels()
        .ok_or_else(|| Error::Precondition("depth/error scan needs clean labels".into()))?;
    let pred = net.forward(data.features())?;
    let index = DepthIndex::new(data, opts)?;
    let rows: Vec<(usize, Vec<f64>)> = data
        .features()
        .rows()
        .into_iter()
        .map(|r| r.to_vec())
        .enumerate()
        .collect();
    let depths = crate::par::map(rows, |(i, r)| (i, index.depth(&r)));
    let mut points = Vec::with_capacity(data.n());
    for (i, dep) in depths {
        points.push(DepthPoint {
            index: i,
            depth: dep?,
            error: Some((pred[i] - clean[i]).powi(2)),
        });
    }
    let depth: Vec<f64> = points.iter().map(|p| p.depth).collect();
    let err: Vec<f64> = points.iter().map(|p| p.error.unwrap_or(0.0)).collect();
    Ok(DepthReport {
        quintiles: quintiles(&depth, &err),
        spearman: spearman(&depth, &err),
        points,
        n_directions: opts.n_directions,
        seed: opts.seed,
    })
}

/// Split points sorted by depth (ties by index) into five near-equal groups.
pub fn quintiles(depth: &[f64], error: &[f64]) -> Vec<Quintile> {
    let n = depth.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| depth[a].total_cmp(&depth[b]).then(a.cmp(&b)));
    (0..5)
        .filter_map(|q| {
            let (lo, hi) = (q * n / 5, (q + 1) * n / 5);
            if lo == hi {
                return None;
            }
            let idx = &order[lo..hi];
            let mut errs: Vec<f64> = idx.iter().map(|&i| error[i]).collect();
            errs.sort_by(f64::total_cmp);
            let m = errs.len();
            let median = if m % 2 == 1 {
                errs[m / 2]
            } else {
                0.5 * (errs[m / 2 - 1] + errs[m / 2])
            };
            Some(Quintile {
                quintile: q + 1,
                depth_lo: depth[idx[0]],
                depth_hi: depth[idx[m - 1]],
                count: m,
                mean_error: errs.iter().sum::<f64>() / m as f64,
                median_error: median,
            })
        })
        .collect()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; None when either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}
