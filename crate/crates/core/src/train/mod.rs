//! Full-batch gradient descent with optional global-norm clipping.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::model::{GradWorkspace, Network};
use crate::numerics::SeedSpec;
use crate::{Error, Result};

/// Loss above this (or non-finite) aborts training.
pub const DIVERGENCE_LOSS: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eta: f64,
    pub epochs: usize,
    pub clip_norm: Option<f64>,
    pub eval_every: usize,
    pub lambda_max_every: Option<usize>,
    pub init_scale: f64,
    pub seed: SeedSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 0.4,
            epochs: 5000,
            clip_norm: Some(50.0),
            eval_every: 100,
            lambda_max_every: None,
            init_scale: 1.0,
            seed: SeedSpec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::Domain(format!("eta must be positive, got {}", self.eta)));
        }
        if self.epochs == 0 || self.eval_every == 0 || self.lambda_max_every == Some(0) {
            return Err(Error::Domain("epochs, eval_every and lambda_max_every must be >= 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Domain(format!("clip_norm must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// State at the start of `epoch` (after `epoch` updates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub true_mse: Option<f64>,
    pub lambda_max: Option<f64>,
    pub beos: Option<bool>,
    pub grad_norm: f64,
    /// Whether the gradient at this state exceeds the clipping threshold.
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<TrainRecord>,
    pub final_net: Network,
}

impl Trajectory {
    pub fn last(&self) -> &TrainRecord {
        self.records.last().expect("a trajectory always has its final record")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_records_csv(&self.records, out)
    }
}

pub fn write_records_csv<W: Write>(records: &[TrainRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::Numeric(format!("csv write: {e}")))?;
    }
    w.flush().map_err(|e| Error::Numeric(format!("csv write: {e}")))?;
    Ok(())
}

/// Top Hessian eigenvalue of the training loss at a given network.
pub trait CurvatureProbe: Sync {
    fn lambda_max(&self, net: &Network, data: &Dataset) -> Result<f64>;
}

pub fn gd_train(
    net0: &Network,
    data: &Dataset,
    cfg: &TrainConfig,
    probe: Option<&dyn CurvatureProbe>,
) -> Result<Trajectory> {
    gd_train_observed(net0, data, cfg, probe, &mut |_, _| {})
}

/// As [`gd_train`], calling `observer` with each emitted record and the network at that epoch.
pub fn gd_train_observed(
    net0: &Network,
    data: &Dataset,
    cfg: &TrainConfig,
    probe: Option<&dyn CurvatureProbe>,
    observer: &mut dyn FnMut(&TrainRecord, &Network),
) -> Result<Trajectory> {
    cfg.validate()?;
    net0.validate()?;
    if data.n() == 0 {
        return Err(Error::Arity("empty dataset".into()));
    }
    let x = data.features();
    let y = data.labels();
    let clean = data.clean_labels();
    let mut net = net0.clone();
    let mut ws = GradWorkspace::new(data.n(), net.width());
    let mut grad = vec![0.0; net.n_params()];
    let mut records: Vec<TrainRecord> = Vec::new();
    let two_over_eta = 2.0 / cfg.eta;

    for epoch in 0..=cfg.epochs {
        let loss = ws.loss_and_grad(&net, x, y, &mut grad)?;
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Divergence {
                epoch,
                loss,
                last_finite: records.last().cloned().map(Box::new),
            });
        }
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let clipped = cfg.clip_norm.is_some_and(|c| grad_norm > c);
        let is_final = epoch == cfg.epochs;
        let probe_now = cfg.lambda_max_every.is_some_and(|m| epoch % m == 0 || is_final);
        if epoch % cfg.eval_every == 0 || is_final || (probe_now && probe.is_some()) {
            let true_mse = clean.map(|c| {
                let r = ws.residual();
                let mut acc = 0.0;
                for i in 0..r.len() {
                    let e = r[i] + y[i] - c[i];
                    acc += e * e;
                }
                acc / r.len() as f64
            });
            let lambda_max = match (probe, probe_now) {
                (Some(p), true) => Some(p.lambda_max(&net, data)?),
                _ => None,
            };
            let rec = TrainRecord {
                epoch,
                train_loss: loss,
                true_mse,
                lambda_max,
                beos: lambda_max.map(|l| l <= two_over_eta),
                grad_norm,
                clipped,
            };
            observer(&rec, &net);
            records.push(rec);
        }
        if is_final {
            break;
        }
        let scale = if clipped {
            cfg.clip_norm.expect("clipped implies a threshold") / grad_norm
        } else {
            1.0
        };
        net.axpy(-cfg.eta * scale, &grad);
    }
    Ok(Trajectory {
        records,
        final_net: net,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{label_dataset, sample_features, DistSpec, Teacher, TeacherSpec};
    use ndarray::array;

    #[test]
    fn one_step_matches_hand_update() {
        // f = v·relu(w x − b) + β with x = 1 active: r = v(w − b) + β − y.
        let net = Network::new(array![[0.8]], array![0.2], array![1.5], 0.1, true).unwrap();
        let data = Dataset::new(array![[1.0]], array![0.0]).unwrap();
        let cfg = TrainConfig {
            eta: 0.1,
            epochs: 1,
            clip_norm: None,
            eval_every: 1,
            ..Default::default()
        };
        let traj = gd_train(&net, &data, &cfg, None).unwrap();
        let r = 1.5 * 0.6 + 0.1;
        let want = [0.8 - 0.1 * r * 1.5, 0.2 + 0.1 * r * 1.5, 1.5 - 0.1 * r * 0.6, 0.1 - 0.1 * r];
        for (a, b) in traj.final_net.to_flat().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(traj.records.len(), 2);
        assert!((traj.records[0].train_loss - 0.5 * r * r).abs() < 1e-15);
    }

    #[test]
    fn interpolating_start_stays_put() {
        let net = Network::init(2, 4, 1.0, true, SeedSpec::new(3, 3)).unwrap();
        let x = array![[0.1, 0.2], [0.5, -0.4], [-0.3, 0.9]];
        let y = net.forward(x.view()).unwrap();
        let data = Dataset::new(x, y).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            eval_every: 10,
            ..Default::default()
        };
        let traj = gd_train(&net, &data, &cfg, None).unwrap();
        assert_eq!(traj.final_net, net);
        assert!(traj.records.iter().all(|r| r.train_loss == 0.0));
        let epochs: Vec<usize> = traj.records.iter().map(|r| r.epoch).collect();
        assert_eq!(epochs, vec![0, 10, 20, 30, 40, 50]);
    }

    #[test]
    fn small_step_descends_and_is_deterministic() {
        let ds = sample_features(&DistSpec::Sphere { d: 3 }, 40, SeedSpec::new(1, 0)).unwrap();
        let t = TeacherSpec {
            teacher: Teacher::random_quadratic(3, SeedSpec::new(1, 1)),
            noise_sigma: 0.1,
        };
        let ds = label_dataset(ds, &t, SeedSpec::new(1, 2)).unwrap();
        let net = Network::init(3, 16, 1.0, true, SeedSpec::new(1, 3)).unwrap();
        let cfg = TrainConfig {
            eta: 0.001,
            epochs: 1000,
            clip_norm: None,
            eval_every: 100,
            ..Default::default()
        };
        let a = gd_train(&net, &ds, &cfg, None).unwrap();
        for w in a.records.windows(2) {
            assert!(w[1].train_loss <= w[0].train_loss);
        }
        assert!(a.records[0].true_mse.is_some());
        let b = gd_train(&net, &ds, &cfg, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_reported() {
        let net = Network::new(array![[1.0]], array![0.0], array![1.0], 0.0, true).unwrap();
        let data = Dataset::new(array![[10.0]], array![0.0]).unwrap();
        let cfg = TrainConfig {
            eta: 10.0,
            epochs: 200,
            clip_norm: None,
            eval_every: 1,
            ..Default::default()
        };
        match gd_train(&net, &data, &cfg, None) {
            Err(Error::Divergence { last_finite, .. }) => assert!(last_finite.is_some()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn clipping_caps_the_step() {
        let net = Network::new(array![[1.0]], array![0.0], array![1.0], 0.0, true).unwrap();
        let data = Dataset::new(array![[10.0]], array![0.0]).unwrap();
        let cfg = TrainConfig {
            eta: 0.01,
            epochs: 1,
            clip_norm: Some(1.0),
            eval_every: 1,
            ..Default::default()
        };
        let traj = gd_train(&net, &data, &cfg, None).unwrap();
        assert!(traj.records[0].clipped);
        let step: f64 = traj
            .final_net
            .to_flat()
            .iter()
            .zip(net.to_flat())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((step - 0.01).abs() < 1e-12);
    }
}
