use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::gfun::{BranchSums, DirectionSweep, DirectionThreshold};
use crate::data::{DistSpec, FeatureSampler};
use crate::numerics::{ols_loglog, unit_vector, SeedSpec, SlopeFit};
use crate::{Error, Result};

/// Number of batches behind every batch-means standard error.
pub const BATCHES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Activation probability of the (u, t) branch and its stderr.
    pub p: f64,
    pub p_stderr: f64,
    pub n_mc: usize,
}

fn batch_sizes(n_mc: usize) -> Vec<usize> {
    (0..BATCHES)
        .map(|b| n_mc / BATCHES + usize::from(b < n_mc % BATCHES))
        .collect()
}

/// Standard error of the mean of batch statistics.
fn batch_stderr(values: &[f64]) -> f64 {
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (var / b).sqrt()
}

fn draw(sampler: &FeatureSampler, component: Option<usize>, n: usize, seed: SeedSpec) -> Array2<f64> {
    let mut rng = seed.rng();
    let mut x = Array2::zeros((n, sampler.dim()));
    for mut row in x.rows_mut() {
        let out = row.as_slice_mut().expect("standard layout");
        match component {
            Some(j) => sampler.sample_component_into(j, &mut rng, out),
            None => {
                sampler.sample_into(&mut rng, out);
            }
        }
    }
    x
}

/// Per batch, branch sums for every threshold along direction u.
fn batch_sums_along(
    sampler: &FeatureSampler,
    component: Option<usize>,
    u: &[f64],
    ts: &[f64],
    n_mc: usize,
    seed: SeedSpec,
) -> Vec<Vec<BranchSums>> {
    let jobs: Vec<(usize, usize)> = batch_sizes(n_mc).into_iter().enumerate().collect();
    crate::par::map(jobs, |(b, size)| {
        let x = draw(sampler, component, size, seed.child(b as u64));
        let sweep = DirectionSweep::new(x.view(), u);
        ts.iter().map(|&t| sweep.sums_at(t)).collect()
    })
}

fn reduce(batches: &[Vec<BranchSums>], idx: usize, d: usize, n_mc: usize) -> McEstimate {
    let mut all = BranchSums::zeros(d);
    let mut gs = Vec::with_capacity(batches.len());
    let mut ps = Vec::with_capacity(batches.len());
    for b in batches {
        all.merge(&b[idx]);
        let v = b[idx].value();
        gs.push(v.value);
        ps.push(v.plus.p);
    }
    let v = all.value();
    McEstimate {
        estimate: v.value,
        stderr: batch_stderr(&gs),
        p: v.plus.p,
        p_stderr: batch_stderr(&ps),
        n_mc,
    }
}

/// Population g(u, t) for several thresholds along one direction, from one shared sample.
pub fn g_population_curve(spec: &DistSpec, u: &[f64], ts: &[f64], n_mc: usize, seed: SeedSpec) -> Result<Vec<McEstimate>> {
    if n_mc < 1000 {
        return Err(Error::Domain(format!("n_mc must be at least 1000, got {n_mc}")));
    }
    let q = DirectionThreshold::new(u.to_vec(), 0.0)?;
    let sampler = FeatureSampler::new(spec)?;
    if q.u().len() != sampler.dim() {
        return Err(Error::Arity("probe dimension differs from the distribution".into()));
    }
    let batches = batch_sums_along(&sampler, None, u, ts, n_mc, seed);
    Ok((0..ts.len()).map(|i| reduce(&batches, i, sampler.dim(), n_mc)).collect())
}

/// Monte-Carlo plug-in estimate of the population g at one probe, with batch-means stderr.
pub fn g_population_mc(spec: &DistSpec, q: &DirectionThreshold, n_mc: usize, seed: SeedSpec) -> Result<McEstimate> {
    Ok(g_population_curve(spec, q.u(), &[q.t()], n_mc, seed)?[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationRow {
    pub probe: usize,
    pub t: f64,
    pub g: f64,
    pub g_stderr: f64,
    pub g_j: f64,
    pub g_j_stderr: f64,
    /// g − (p_j²/√2)·g_j
    pub raw_margin: f64,
    /// raw margin + 3·combined stderr
    pub adjusted_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub component: usize,
    pub p_j: f64,
    pub rows: Vec<DominationRow>,
    pub worst_raw: f64,
    pub worst_adjusted: f64,
    pub passed: bool,
}

/// Check g(u,t) ≥ (p_j²/√2)·g_j(u,t) at each probe, where g_j is computed under
/// mixture component j alone.
pub fn g_domination_check(
    spec: &DistSpec,
    component: usize,
    probes: &[DirectionThreshold],
    n_mc: usize,
    seed: SeedSpec,
) -> Result<DominationReport> {
    let DistSpec::MixtureBalls(mix) = spec else {
        return Err(Error::Spec("domination check needs a mixture distribution".into()));
    };
    if component >= mix.components() {
        return Err(Error::Domain(format!("component {component} out of range")));
    }
    if n_mc < 1000 {
        return Err(Error::Domain(format!("n_mc must be at least 1000, got {n_mc}")));
    }
    let sampler = FeatureSampler::new(spec)?;
    let d = sampler.dim();
    if probes.iter().any(|q| q.u().len() != d) {
        return Err(Error::Arity("probe dimension differs from the distribution".into()));
    }
    let p_j = mix.probs[component];
    let coef = p_j * p_j / 2f64.sqrt();

    let sums = |comp: Option<usize>, stream: u64| -> Vec<Vec<BranchSums>> {
        let jobs: Vec<(usize, usize)> = batch_sizes(n_mc).into_iter().enumerate().collect();
        crate::par::map(jobs, |(b, size)| {
            let x = draw(&sampler, comp, size, seed.child(stream).child(b as u64));
            probes.iter().map(|q| BranchSums::from_rows(x.view(), q)).collect()
        })
    };
    let global = sums(None, 0);
    let local = sums(Some(component), 1);

    let mut rows = Vec::with_capacity(probes.len());
    for (i, q) in probes.iter().enumerate() {
        let g = reduce(&global, i, d, n_mc);
        let gj = reduce(&local, i, d, n_mc);
        let raw = g.estimate - coef * gj.estimate;
        let se = (g.stderr.powi(2) + (coef * gj.stderr).powi(2)).sqrt();
        rows.push(DominationRow {
            probe: i,
            t: q.t(),
            g: g.estimate,
            g_stderr: g.stderr,
            g_j: gj.estimate,
            g_j_stderr: gj.stderr,
            raw_margin: raw,
            adjusted_margin: raw + 3.0 * se,
        });
    }
    let worst_raw = rows.iter().map(|r| r.raw_margin).fold(f64::INFINITY, f64::min);
    let worst_adjusted = rows.iter().map(|r| r.adjusted_margin).fold(f64::INFINITY, f64::min);
    Ok(DominationReport {
        component,
        p_j,
        rows,
        worst_raw,
        worst_adjusted,
        passed: worst_adjusted >= 0.0,
    })
}

/// Seeded probe grid: `n_dirs` uniform directions × `n_thresholds` equally spaced
/// thresholds on [−radius, radius].
pub fn probe_grid(d: usize, n_dirs: usize, n_thresholds: usize, radius: f64, seed: SeedSpec) -> Vec<DirectionThreshold> {
    let mut rng = seed.rng();
    let mut out = Vec::with_capacity(n_dirs * n_thresholds);
    for _ in 0..n_dirs {
        let u = unit_vector(&mut rng, d);
        for i in 0..n_thresholds {
            let t = if n_thresholds == 1 {
                0.0
            } else {
                -radius + 2.0 * radius * i as f64 / (n_thresholds - 1) as f64
            };
            out.push(DirectionThreshold::new(u.clone(), t).expect("unit direction"));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationOptions {
    pub n_directions: usize,
    pub n_thresholds: usize,
    /// Samples behind the population reference.
    pub n_pop: usize,
    /// Independent datasets per n; the sup-deviation is averaged over them.
    pub reps: usize,
}

impl Default for DeviationOptions {
    fn default() -> Self {
        Self {
            n_directions: 20,
            n_thresholds: 10,
            n_pop: 2_000_000,
            reps: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationScan {
    /// (n, rep, sup over probes of |g_D − g_P|)
    pub rows: Vec<(usize, usize, f64)>,
    /// (n, mean sup-deviation over reps)
    pub means: Vec<(usize, f64)>,
    pub fit: SlopeFit,
}

/// Sup over a fixed probe grid of |g_empirical − g_population| as a function of n,
/// with a log-log fit of the rep-averaged deviation on n.
pub fn g_deviation_scan(spec: &DistSpec, n_values: &[usize], opts: &DeviationOptions, seed: SeedSpec) -> Result<DeviationScan> {
    if n_values.len() < 3 || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Arity("need at least 3 increasing sample sizes".into()));
    }
    if opts.reps == 0 || opts.n_directions == 0 || opts.n_thresholds == 0 {
        return Err(Error::Domain("deviation scan needs reps, directions and thresholds >= 1".into()));
    }
    let sampler = FeatureSampler::new(spec)?;
    let d = sampler.dim();
    let radius = match spec {
        DistSpec::Gaussian { .. } => 3.0,
        _ => 1.0,
    };
    let probes = probe_grid(d, opts.n_directions, opts.n_thresholds, radius, seed.child(0));
    let ts: Vec<f64> = probes[..opts.n_thresholds].iter().map(|q| q.t()).collect();
    let dirs: Vec<Vec<f64>> = probes.chunks(opts.n_thresholds).map(|c| c[0].u().to_vec()).collect();

    let pop_x = draw(&sampler, None, opts.n_pop, seed.child(1));
    let pop: Vec<Vec<f64>> = crate::par::map(dirs.clone(), |u| {
        let sweep = DirectionSweep::new(pop_x.view(), &u);
        ts.iter().map(|&t| sweep.at(t).value).collect()
    });
    drop(pop_x);

    let jobs: Vec<(usize, usize)> = n_values
        .iter()
        .flat_map(|&n| (0..opts.reps).map(move |r| (n, r)))
        .collect();
    let rows: Vec<(usize, usize, f64)> = crate::par::map(jobs, |(n, rep)| {
        let x = draw(&sampler, None, n, seed.child(2).child(n as u64).child(rep as u64));
        let mut sup = 0.0f64;
        for (u, gp) in dirs.iter().zip(&pop) {
            let sweep = DirectionSweep::new(x.view(), u);
            for (&t, &g) in ts.iter().zip(gp) {
                sup = sup.max((sweep.at(t).value - g).abs());
            }
        }
        (n, rep, sup)
    });
    let means: Vec<(usize, f64)> = n_values
        .iter()
        .map(|&n| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.0 == n).map(|r| r.2).collect();
            (n, vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    let xs: Vec<f64> = means.iter().map(|m| m.0 as f64).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.1).collect();
    let fit = ols_loglog(&xs, &ys)?;
    Ok(DeviationScan { rows, means, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_above_one_is_zero() {
        let q = DirectionThreshold::new(vec![0.0, 1.0, 0.0], 1.0).unwrap();
        let est = g_population_mc(&DistSpec::Sphere { d: 3 }, &q, 5000, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(est.estimate, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn disc_half_plane_probability() {
        let q = DirectionThreshold::new(vec![1.0, 0.0], 0.0).unwrap();
        let est = g_population_mc(&DistSpec::Ball { d: 2 }, &q, 100_000, SeedSpec::new(2, 0)).unwrap();
        assert!((est.p - 0.5).abs() <= 3.0 * est.p_stderr, "{est:?}");
        assert!(est.stderr > 0.0);
    }

    #[test]
    fn small_n_mc_rejected() {
        let q = DirectionThreshold::new(vec![1.0, 0.0], 0.0).unwrap();
        assert!(g_population_mc(&DistSpec::Ball { d: 2 }, &q, 10, SeedSpec::default()).is_err());
    }
}
