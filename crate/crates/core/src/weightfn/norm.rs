use std::io::Write;

use serde::{Deserialize, Serialize};

use super::gfun::{g_detail, DirectionThreshold, GValue};
use crate::curvature::CurvatureReport;
use crate::data::Dataset;
use crate::model::{mse, Network};
use crate::{Error, Result};

/// Slack on the BEoS bound comparison.
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronWeight {
    pub k: usize,
    /// |v_k|·||w_k||
    pub a: f64,
    pub u: Vec<f64>,
    pub t: f64,
    pub g: GValue,
    /// Fraction of samples with w_k·x > b_k.
    pub activation_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeosBound {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// True when a curvature report confirmed λ_max ≤ 2/η, so the bound is implied
    /// by theory; otherwise the comparison is unconditional.
    pub implied: bool,
    pub loss: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormReport {
    pub total: f64,
    pub per_neuron: Vec<NeuronWeight>,
    pub bound: Option<BeosBound>,
}

impl WeightedNormReport {
    /// One row per neuron: k, a, t, p/e/s/g of both branches, g, rate.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Numeric(format!("csv write: {e}"));
        w.write_record([
            "k", "a", "t", "p_plus", "e_plus", "s_plus", "g_plus", "p_minus", "e_minus", "s_minus", "g_minus", "g",
            "activation_rate",
        ])
        .map_err(io)?;
        for nw in &self.per_neuron {
            let g = &nw.g;
            let row = [
                nw.a, nw.t, g.plus.p, g.plus.e, g.plus.s, g.plus.g, g.minus.p, g.minus.e, g.minus.s, g.minus.g, g.value,
                nw.activation_rate,
            ];
            let mut rec = vec![nw.k.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Numeric(format!("csv write: {e}")))?;
        Ok(())
    }
}

/// Σ_k |v_k|·||w_k||·g(w_k/||w_k||, b_k/||w_k||) under the empirical data measure.
pub fn weighted_path_norm(net: &Network, data: &Dataset) -> Result<WeightedNormReport> {
    net.validate()?;
    if net.dim() != data.dim() {
        return Err(Error::Arity(format!("network dimension {} vs data {}", net.dim(), data.dim())));
    }
    if data.n() == 0 {
        return Err(Error::Arity("empty dataset".into()));
    }
    let x = data.features();
    let items: Vec<usize> = (0..net.width()).collect();
    let per_neuron = crate::par::map(items, |k| {
        let w = net.w.row(k).to_vec();
        let (q, norm) = DirectionThreshold::from_neuron(&w, net.b[k]).expect("validated network");
        let g = g_detail(x, &q);
        NeuronWeight {
            k,
            a: net.v[k].abs() * norm,
            u: q.u().to_vec(),
            t: q.t(),
            g,
            activation_rate: g.plus.p,
        }
    });
    let total = per_neuron.iter().map(|nw| nw.a * nw.g.value).sum();
    Ok(WeightedNormReport {
        total,
        per_neuron,
        bound: None,
    })
}

/// Compare the weighted path norm with 1/η − 1/2 + (R+1)·sqrt(2L).
pub fn beos_bound_check(
    net: &Network,
    data: &Dataset,
    eta: f64,
    curvature: Option<&CurvatureReport>,
) -> Result<WeightedNormReport> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    let mut report = weighted_path_norm(net, data)?;
    let loss = 0.5 * mse(net, data.features(), data.labels())?;
    let radius = data.radius();
    let rhs = 1.0 / eta - 0.5 + (radius + 1.0) * (2.0 * loss).sqrt();
    let implied = curvature.is_some_and(|c| c.lambda_max <= 2.0 / eta);
    report.bound = Some(BeosBound {
        lhs: report.total,
        rhs,
        satisfied: report.total <= rhs + BOUND_SLACK,
        implied,
        loss,
        radius,
    });
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationStats {
    pub rates: Vec<f64>,
    /// (lower edge, upper edge, count) over 20 equal bins of [0, 1]; rate 1 falls in the last bin.
    pub histogram: Vec<(f64, f64, usize)>,
    /// (|v_k|·||w_k||, rate_k)
    pub scatter: Vec<(f64, f64)>,
}

pub const HISTOGRAM_BINS: usize = 20;

/// Per-neuron fraction of samples with w_k·x_i > b_k.
pub fn activation_rates(net: &Network, data: &Dataset) -> Result<ActivationStats> {
    if data.n() == 0 {
        return Err(Error::Arity("empty dataset".into()));
    }
    let z = net.preactivations(data.features())?;
    let n = data.n() as f64;
    let rates: Vec<f64> = z
        .columns()
        .into_iter()
        .map(|c| c.iter().filter(|&&t| t > 0.0).count() as f64 / n)
        .collect();
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &r in &rates {
        let bin = ((r * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    let width = 1.0 / HISTOGRAM_BINS as f64;
    let histogram = counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i as f64 * width, (i + 1) as f64 * width, c))
        .collect();
    let scatter = (0..net.width())
        .map(|k| {
            let w = net.w.row(k);
            (net.v[k].abs() * w.dot(&w).sqrt(), rates[k])
        })
        .collect();
    Ok(ActivationStats {
        rates,
        histogram,
        scatter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sample_features, DistSpec};
    use crate::numerics::SeedSpec;
    use ndarray::{array, Array1};

    fn ball_data() -> Dataset {
        sample_features(&DistSpec::Ball { d: 3 }, 300, SeedSpec::new(21, 0)).unwrap()
    }

    #[test]
    fn dead_network_has_zero_norm() {
        let data = ball_data();
        let net = Network::new(array![[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]], array![5.0, 5.0], array![1.0, -3.0], 0.0, true)
            .unwrap();
        let rep = weighted_path_norm(&net, &data).unwrap();
        assert!(rep.per_neuron.iter().all(|nw| nw.g.plus.p == 0.0));
        assert_eq!(rep.total, 0.0);
    }

    #[test]
    fn invariant_under_rescaling() {
        let data = ball_data();
        let mut net = Network::init(3, 12, 1.0, true, SeedSpec::new(21, 1)).unwrap();
        net.b = Array1::linspace(-0.5, 0.5, 12);
        let (r, _) = net.rescale_homogeneous();
        let a = weighted_path_norm(&net, &data).unwrap().total;
        let b = weighted_path_norm(&r, &data).unwrap().total;
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        let mut scaled = net.clone();
        for k in 0..12 {
            let c = 0.5 + k as f64;
            scaled.w.row_mut(k).mapv_inplace(|x| x * c);
            scaled.b[k] *= c;
            scaled.v[k] /= c;
        }
        let c = weighted_path_norm(&scaled, &data).unwrap().total;
        assert!((a - c).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn trivial_bound_for_dead_net() {
        let x = array![[0.5, 0.0], [0.0, 0.5]];
        let net = Network::new(array![[1.0, 0.0]], array![2.0], array![1.0], 0.0, true).unwrap();
        let data = Dataset::new(x, array![0.0, 0.0]).unwrap();
        let rep = beos_bound_check(&net, &data, 1e-3, None).unwrap();
        let b = rep.bound.unwrap();
        assert_eq!(b.lhs, 0.0);
        assert!((b.rhs - (1e3 - 0.5)).abs() < 1e-9);
        assert!(b.satisfied && !b.implied);
    }

    #[test]
    fn rates_at_extremes() {
        let data = ball_data();
        let net = Network::new(array![[0.0, 2.0, 0.0], [1.0, 1.0, 0.0]], array![2.5, -5.0], array![1.0, 1.0], 0.0, true)
            .unwrap();
        let stats = activation_rates(&net, &data).unwrap();
        assert_eq!(stats.rates, vec![0.0, 1.0]);
        assert_eq!(stats.histogram[0].2, 1);
        assert_eq!(stats.histogram[HISTOGRAM_BINS - 1].2, 1);
    }
}
