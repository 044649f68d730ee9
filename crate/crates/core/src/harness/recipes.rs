//! The experiment recipes behind [`super::run_experiment`].
//!
//! Every recipe turns a validated config into tables, fits and verdicts. Jobs
//! fan out over (sweep value × seed) and are merged in their canonical order,
//! so outputs do not depend on the worker count.

use std::collections::BTreeMap;

use ndarray::Array1;
use rand::Rng;

use super::config::{Experiment, ExperimentConfig};
use super::result::{Cell, Check, PlotSpec, Table, Verdict};
use crate::curvature::{hvp, PowerProbe};
use crate::data::{label_dataset, load_csv_dataset, sample_features, Dataset, DistSpec, MixtureSpec, TeacherSpec};
use crate::depth::{depth_error_scan, DataDirections, DepthIndex, DepthOptions};
use crate::flatnet::{build_flat_interpolator, verify_one_hot_activation};
use crate::model::{loss_and_grad, Network};
use crate::numerics::{ols_loglog, unit_vector, SeedSpec, SlopeFit};
use crate::shatter::{
    cap_scaling_report, choose_eps_with, empty_cap_experiment, pack_caps, separation_scan, CapMassEstimator,
    EmptyCapOptions, DEFAULT_CALIBRATION_MC,
};
use crate::train::{gd_train_observed, CurvatureProbe, TrainRecord};
use crate::weightfn::{
    activation_rates, beos_bound_check, g_deviation_scan, g_domination_check, g_population_curve, probe_grid,
    DeviationOptions,
};
use crate::{Error, Result};

// Stream ids separating the random inputs derived from one master seed.
const DATA_STREAM: u64 = 0xda7a;
const LABEL_STREAM: u64 = 0x1abe1;
const INIT_STREAM: u64 = 0x1417;
const PROBE_STREAM: u64 = 0x9b0e;

#[derive(Debug, Default)]
pub(crate) struct Output {
    pub tables: Vec<Table>,
    pub fits: BTreeMap<String, SlopeFit>,
    pub verdicts: Vec<Verdict>,
    /// Checks outside the acceptance criteria; reported, never gating.
    diagnostics: Option<Table>,
}

impl Output {
    fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    fn diagnostic(&mut self, name: &str, value: f64, check: Check) {
        let t = self
            .diagnostics
            .get_or_insert_with(|| Table::new("diagnostics", &["name", "value", "check", "holds"]));
        t.push(vec![name.into(), value.into(), Cell::S(check.to_string()), check.passes(value).into()]);
    }

    fn finish(mut self) -> Self {
        if let Some(t) = self.diagnostics.take() {
            self.tables.push(t);
        }
        self
    }
}

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<Output> {
    let out = match cfg.experiment() {
        Experiment::SlopeVsN => slope_vs_n(cfg),
        Experiment::AlphaSweep => alpha_sweep(cfg),
        Experiment::SphereVsLines => sphere_vs_lines(cfg),
        Experiment::DepthError => depth_error(cfg),
        Experiment::FlatCheck => flat_check(cfg),
        Experiment::ShatterRates => shatter_rates(cfg),
        Experiment::GSuite => g_suite(cfg),
        Experiment::CsvVsGaussian => csv_vs_gaussian(cfg),
        Experiment::BeosBound => beos_bound(cfg),
    }?;
    Ok(out.finish())
}

// ---------------------------------------------------------------- training

/// Path-norm bound evaluated at a probed epoch.
#[derive(Debug, Clone)]
struct BoundRow {
    epoch: usize,
    lambda_max: f64,
    below_edge: bool,
    lhs: f64,
    rhs: f64,
    loss: f64,
    radius: f64,
}

#[derive(Debug, Clone)]
struct TrainOutcome {
    records: Vec<TrainRecord>,
    final_net: Option<Network>,
    /// (epoch, loss) when training diverged; records then stop before it.
    diverged: Option<(usize, f64)>,
    bounds: Vec<BoundRow>,
}

impl TrainOutcome {
    fn final_true_mse(&self) -> f64 {
        match self.diverged {
            Some(_) => f64::NAN,
            None => self.records.last().and_then(|r| r.true_mse).unwrap_or(f64::NAN),
        }
    }

    fn final_loss(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.train_loss)
    }
}

fn probe_of(cfg: &ExperimentConfig, seed: u64) -> Result<Option<PowerProbe>> {
    if !cfg.values().contains_key("probe.tol") {
        return Ok(None);
    }
    Ok(Some(PowerProbe {
        tol: cfg.f64("probe.tol")?,
        max_iter: cfg.usize("probe.max_iter")?,
        seed: SeedSpec::new(seed, PROBE_STREAM),
    }))
}

/// Train `net0` on `data`, keeping every emitted record even if training diverges.
/// With `bound_eta`, the path-norm bound is evaluated at every probed epoch.
fn train(
    cfg: &ExperimentConfig,
    net0: &Network,
    data: &Dataset,
    probe: Option<&PowerProbe>,
    bound_eta: Option<f64>,
) -> Result<TrainOutcome> {
    let tc = cfg.train_config()?;
    let mut records = Vec::new();
    let mut bounds = Vec::new();
    let mut failure: Option<Error> = None;
    let mut observer = |rec: &TrainRecord, net: &Network| {
        records.push(rec.clone());
        if let (Some(eta), Some(lam)) = (bound_eta, rec.lambda_max) {
            match beos_bound_check(net, data, eta, None) {
                Ok(report) => {
                    let b = report.bound.expect("bound requested");
                    bounds.push(BoundRow {
                        epoch: rec.epoch,
                        lambda_max: lam,
                        below_edge: lam <= 2.0 / eta,
                        lhs: b.lhs,
                        rhs: b.rhs,
                        loss: b.loss,
                        radius: b.radius,
                    });
                }
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
    };
    let probe_dyn = probe.map(|p| p as &dyn CurvatureProbe);
    let outcome = gd_train_observed(net0, data, &tc, probe_dyn, &mut observer);
    if let Some(e) = failure {
        return Err(e);
    }
    match outcome {
        Ok(traj) => Ok(TrainOutcome {
            records,
            final_net: Some(traj.final_net),
            diverged: None,
            bounds,
        }),
        Err(Error::Divergence { epoch, loss, .. }) => Ok(TrainOutcome {
            records,
            final_net: None,
            diverged: Some((epoch, loss)),
            bounds,
        }),
        Err(e) => Err(e),
    }
}

fn stub_mode(cfg: &ExperimentConfig) -> Result<bool> {
    Ok(cfg.text("train.mode")? == "stub")
}

fn init_net(cfg: &ExperimentConfig, d: usize, seed: u64, tag: u64) -> Result<Network> {
    Network::init(
        d,
        cfg.usize("net.width")?,
        cfg.f64("net.init_scale")?,
        cfg.bool("net.has_output_bias")?,
        SeedSpec::new(seed, INIT_STREAM).child(tag),
    )
}

fn labelled_sample(spec: &DistSpec, teacher: &TeacherSpec, n: usize, seed: u64, tag: u64) -> Result<Dataset> {
    let x = sample_features(spec, n, SeedSpec::new(seed, DATA_STREAM).child(tag))?;
    label_dataset(x, teacher, SeedSpec::new(seed, LABEL_STREAM).child(tag))
}

fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    ols_loglog(xs, ys).ok()
}

/// One row of a power-law sweep.
#[derive(Debug, Clone)]
struct SweepRun {
    group: usize,
    n: usize,
    seed: u64,
    train_loss: f64,
    true_mse: f64,
    diverged: bool,
}

/// True MSE over (group × n × seed), the per-group seed-averaged means and
/// their log-log slopes in n.
struct PowerLawSweep {
    runs: Table,
    means: Table,
    /// Per group: fitted slope, or None if the means could not be fitted.
    fits: Vec<Option<SlopeFit>>,
    any_diverged: bool,
}

fn power_law_sweep(cfg: &ExperimentConfig, group_col: &str, groups: &[(String, DistSpec)]) -> Result<PowerLawSweep> {
    let ns = cfg.usize_list("sweep.n_values")?;
    let stub = stub_mode(cfg)?;
    let mut jobs: Vec<(usize, usize, u64)> = Vec::new();
    for g in 0..groups.len() {
        for &n in &ns {
            jobs.extend(cfg.seeds().iter().map(|&s| (g, n, s)));
        }
    }
    let results: Vec<Result<SweepRun>> = crate::par::map(jobs, |(g, n, seed)| {
        if stub {
            let v = cfg.f64("stub.coef")? * (n as f64).powf(cfg.f64("stub.exponent")?);
            return Ok(SweepRun { group: g, n, seed, train_loss: f64::NAN, true_mse: v, diverged: false });
        }
        let spec = &groups[g].1;
        let d = spec.dim();
        let teacher = cfg.teacher(d)?;
        let data = labelled_sample(spec, &teacher, n, seed, n as u64)?;
        let net0 = init_net(cfg, d, seed, g as u64)?;
        let out = train(cfg, &net0, &data, None, None)?;
        Ok(SweepRun {
            group: g,
            n,
            seed,
            train_loss: out.final_loss(),
            true_mse: out.final_true_mse(),
            diverged: out.diverged.is_some(),
        })
    });
    let runs_data = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut runs = Table::new("runs", &[group_col, "n", "seed", "train_loss", "true_mse", "diverged"]);
    for r in &runs_data {
        runs.push(vec![
            Cell::S(groups[r.group].0.clone()),
            r.n.into(),
            r.seed.into(),
            r.train_loss.into(),
            r.true_mse.into(),
            r.diverged.into(),
        ]);
    }
    let mut means = Table::new("means", &[group_col, "n", "mean_true_mse"])
        .with_plot(PlotSpec::line("n", "mean_true_mse").grouped(group_col).loglog());
    let mut fits = Vec::new();
    for (g, (label, _)) in groups.iter().enumerate() {
        let mut ys = Vec::new();
        for &n in &ns {
            let vals: Vec<f64> = runs_data.iter().filter(|r| r.group == g && r.n == n).map(|r| r.true_mse).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            means.push(vec![Cell::S(label.clone()), n.into(), m.into()]);
            ys.push(m);
        }
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        fits.push(loglog_fit(&xs, &ys));
    }
    let any_diverged = runs_data.iter().any(|r| r.diverged);
    Ok(PowerLawSweep { runs, means, fits, any_diverged })
}

fn finish_sweep(
    out: &mut Output,
    cfg: &ExperimentConfig,
    sweep: &PowerLawSweep,
    labels: &[String],
    prefix: &str,
    criterion: u32,
) -> Result<()> {
    for (g, fit) in sweep.fits.iter().enumerate() {
        if let Some(f) = fit {
            out.fits.insert(format!("{prefix}{}", labels[g]), *f);
        }
    }
    out.verdict(Verdict::holds("no_divergence", Some(criterion), !sweep.any_diverged, &sweep.runs, (0, sweep.runs.len())));
    if stub_mode(cfg)? {
        let expo = cfg.f64("stub.exponent")?;
        let worst = sweep
            .fits
            .iter()
            .map(|f| f.map_or(f64::NAN, |f| (f.slope - expo).abs()))
            .fold(0.0f64, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) });
        out.verdict(
            Verdict::new("stub_slope_recovered", Some(criterion), worst, Check::AtMost { bound: 1e-9 }, &sweep.means, (0, sweep.means.len()))
                .with_detail(format!("stub exponent {expo}")),
        );
    }
    Ok(())
}

fn slope_vs_n(cfg: &ExperimentConfig) -> Result<Output> {
    let ds = cfg.usize_list("sweep.d_values")?;
    let groups: Vec<(String, DistSpec)> = ds
        .iter()
        .map(|&d| Ok((d.to_string(), cfg.dist_with(Some(d), None)?)))
        .collect::<Result<_>>()?;
    let labels: Vec<String> = groups.iter().map(|g| g.0.clone()).collect();
    let sweep = power_law_sweep(cfg, "d", &groups)?;
    let mut out = Output::default();
    finish_sweep(&mut out, cfg, &sweep, &labels, "slope_d", 9)?;
    let per = cfg.usize_list("sweep.n_values")?.len();
    let max_slope = cfg.f64("verdict.max_slope")?;
    let slopes: Vec<f64> = sweep.fits.iter().map(|f| f.map_or(f64::NAN, |f| f.slope)).collect();
    for (g, &s) in slopes.iter().enumerate() {
        out.verdict(Verdict::new(
            &format!("slope_d{}_decreasing", labels[g]),
            Some(9),
            s,
            Check::AtMost { bound: max_slope },
            &sweep.means,
            (g * per, (g + 1) * per),
        ));
    }
    let spread = if slopes.iter().any(|s| s.is_nan()) {
        f64::NAN
    } else {
        slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - slopes.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    out.verdict(
        Verdict::new(
            "slope_spread_across_d",
            Some(9),
            spread,
            Check::AtMost { bound: cfg.f64("verdict.max_spread")? },
            &sweep.means,
            (0, sweep.means.len()),
        )
        .with_detail(format!("slopes {slopes:?}")),
    );
    out.table(sweep.runs);
    out.table(sweep.means);
    Ok(out)
}

fn alpha_sweep(cfg: &ExperimentConfig) -> Result<Output> {
    if cfg.text("dist.kind")? != "beta_radial" {
        return Err(Error::Config {
            line: 0,
            message: "alpha_sweep needs dist.kind = beta_radial".into(),
        });
    }
    let mut alphas = cfg.f64_list("sweep.alpha_values")?;
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let groups: Vec<(String, DistSpec)> = alphas
        .iter()
        .map(|&a| Ok((format!("{a:?}"), cfg.dist_with(None, Some(a))?)))
        .collect::<Result<_>>()?;
    let labels: Vec<String> = groups.iter().map(|g| g.0.clone()).collect();
    let sweep = power_law_sweep(cfg, "alpha", &groups)?;
    let mut out = Output::default();
    finish_sweep(&mut out, cfg, &sweep, &labels, "slope_alpha", 10)?;
    let per = cfg.usize_list("sweep.n_values")?.len();
    let gap = cfg.f64("verdict.min_gap")?;
    for g in 1..groups.len() {
        let (a, b) = (sweep.fits[g - 1], sweep.fits[g]);
        let diff = match (a, b) {
            (Some(a), Some(b)) => b.slope - a.slope,
            _ => f64::NAN,
        };
        out.verdict(Verdict::new(
            &format!("slope_steeper_alpha{}_vs_{}", labels[g], labels[g - 1]),
            Some(10),
            diff,
            Check::AtMost { bound: -gap },
            &sweep.means,
            ((g - 1) * per, (g + 1) * per),
        ));
    }
    out.table(sweep.runs);
    out.table(sweep.means);
    Ok(out)
}

fn trajectory_table() -> Table {
    Table::new(
        "trajectory",
        &["geometry", "n", "seed", "epoch", "train_loss", "true_mse", "lambda_max", "grad_norm"],
    )
    .with_plot(PlotSpec::line("epoch", "true_mse").grouped("geometry"))
}

fn push_trajectory(t: &mut Table, geometry: &str, n: usize, seed: u64, out: &TrainOutcome) {
    for r in &out.records {
        t.push(vec![
            geometry.into(),
            n.into(),
            seed.into(),
            r.epoch.into(),
            r.train_loss.into(),
            r.true_mse.into(),
            r.lambda_max.into(),
            r.grad_norm.into(),
        ]);
    }
}

fn sphere_vs_lines(cfg: &ExperimentConfig) -> Result<Output> {
    let d = cfg.usize("dist.d")?;
    let sphere = DistSpec::Sphere { d };
    let lines = DistSpec::MixtureBalls(MixtureSpec::uniform(
        d,
        cfg.usize("dist.m")?,
        cfg.usize("dist.components")?,
        cfg.u64("dist.subspace_seed")?,
    ));
    lines.validate()?;
    let geoms = [("sphere", sphere), ("lines", lines)];
    let teacher = cfg.teacher(d)?;
    let jobs: Vec<(usize, u64, usize)> = cfg
        .usize_list("sweep.n_values")?
        .into_iter()
        .flat_map(|n| cfg.seeds().iter().flat_map(move |&s| (0..2).map(move |g| (n, s, g))))
        .collect();
    let results = crate::par::map(jobs.clone(), |(n, seed, g)| -> Result<(TrainOutcome, Dataset)> {
        let data = labelled_sample(&geoms[g].1, &teacher, n, seed, n as u64)?;
        // Shared initialisation: the tag does not depend on the geometry.
        let net0 = init_net(cfg, d, seed, n as u64)?;
        let probe = probe_of(cfg, seed)?;
        Ok((train(cfg, &net0, &data, probe.as_ref(), None)?, data))
    });

    let mut traj = trajectory_table();
    let mut fin = Table::new(
        "final",
        &["geometry", "n", "seed", "last_epoch", "train_loss", "true_mse", "lambda_max", "diverged"],
    );
    let mut hist = Table::new("activation_histogram", &["geometry", "n", "seed", "bin_lo", "bin_hi", "count"])
        .with_plot(PlotSpec::line("bin_lo", "count").grouped("geometry"));
    let mut scatter = Table::new("coef_vs_rate", &["geometry", "n", "seed", "neuron", "rate", "coef_norm"])
        .with_plot(PlotSpec::line("rate", "coef_norm").grouped("geometry").scatter());
    let mut finals = Vec::new();
    for ((n, seed, g), res) in jobs.into_iter().zip(results) {
        let (o, data) = res?;
        let name = geoms[g].0;
        push_trajectory(&mut traj, name, n, seed, &o);
        let last = o.records.last();
        fin.push(vec![
            name.into(),
            n.into(),
            seed.into(),
            last.map_or(0, |r| r.epoch).into(),
            o.final_loss().into(),
            o.final_true_mse().into(),
            last.and_then(|r| r.lambda_max).into(),
            o.diverged.is_some().into(),
        ]);
        finals.push((name, n, seed, o.final_true_mse()));
        if let Some(net) = &o.final_net {
            let stats = activation_rates(net, &data)?;
            for (lo, hi, c) in &stats.histogram {
                hist.push(vec![name.into(), n.into(), seed.into(), (*lo).into(), (*hi).into(), (*c).into()]);
            }
            for (k, (coef, rate)) in stats.scatter.iter().enumerate() {
                scatter.push(vec![name.into(), n.into(), seed.into(), k.into(), (*rate).into(), (*coef).into()]);
            }
        }
    }
    let mut out = Output::default();
    let (lo, hi, lmax) = (cfg.f64("verdict.sphere_low")?, cfg.f64("verdict.sphere_high")?, cfg.f64("verdict.lines_max")?);
    for (row, (name, n, seed, mse)) in finals.into_iter().enumerate() {
        let (vname, check) = if name == "sphere" {
            ("sphere_memorizes_noise", Check::Within { low: lo, high: hi })
        } else {
            ("lines_resist_noise", Check::AtMost { bound: lmax })
        };
        out.verdict(Verdict::new(&format!("{vname}_n{n}_seed{seed}"), Some(11), mse, check, &fin, (row, row + 1)));
    }
    out.table(traj);
    out.table(fin);
    out.table(hist);
    out.table(scatter);
    Ok(out)
}

fn depth_options(cfg: &ExperimentConfig, seed: u64) -> Result<DepthOptions> {
    Ok(DepthOptions {
        n_directions: cfg.usize("depth.n_directions")?,
        seed: SeedSpec::new(seed, 0xde97),
        include_self: true,
        data_directions: match cfg.text("depth.data_directions")? {
            "always" => DataDirections::Always,
            "never" => DataDirections::Never,
            _ => DataDirections::Auto,
        },
    })
}

fn depth_error(cfg: &ExperimentConfig) -> Result<Output> {
    let spec = cfg.dist_with(None, None)?;
    let d = spec.dim();
    let teacher = cfg.teacher(d)?;
    let jobs: Vec<(usize, u64)> = cfg
        .usize_list("sweep.n_values")?
        .into_iter()
        .flat_map(|n| cfg.seeds().iter().map(move |&s| (n, s)))
        .collect();
    let results = crate::par::map(jobs.clone(), |(n, seed)| -> Result<_> {
        let data = labelled_sample(&spec, &teacher, n, seed, n as u64)?;
        let net0 = init_net(cfg, d, seed, n as u64)?;
        let o = train(cfg, &net0, &data, None, None)?;
        let net = o.final_net.clone().ok_or_else(|| {
            let (epoch, loss) = o.diverged.expect("no net means divergence");
            Error::Numeric(format!("training diverged at epoch {epoch} (loss {loss}); no network to scan"))
        })?;
        let report = depth_error_scan(&net, &data, &depth_options(cfg, seed)?)?;
        Ok((o, report))
    });
    let mut scatter = Table::new("scatter", &["n", "seed", "index", "depth", "error"])
        .with_plot(PlotSpec::line("depth", "error").scatter());
    let mut quint = Table::new(
        "quintiles",
        &["n", "seed", "quintile", "depth_lo", "depth_hi", "count", "mean_error", "median_error"],
    )
    .with_plot(PlotSpec::line("quintile", "mean_error"));
    let mut summary = Table::new("summary", &["n", "seed", "final_true_mse", "spearman"]);
    let mut out = Output::default();
    for ((n, seed), res) in jobs.into_iter().zip(results) {
        let (o, report) = res?;
        for p in &report.points {
            scatter.push(vec![n.into(), seed.into(), p.index.into(), p.depth.into(), p.error.into()]);
        }
        for q in &report.quintiles {
            quint.push(vec![
                n.into(),
                seed.into(),
                q.quintile.into(),
                q.depth_lo.into(),
                q.depth_hi.into(),
                q.count.into(),
                q.mean_error.into(),
                q.median_error.into(),
            ]);
        }
        summary.push(vec![n.into(), seed.into(), o.final_true_mse().into(), report.spearman.into()]);
        out.diagnostic(
            &format!("shallow_points_err_more_n{n}_seed{seed}"),
            report.spearman.unwrap_or(f64::NAN),
            Check::AtMost { bound: 0.0 },
        );
    }

    let mut checks = Table::new("depth_checks", &["check", "d", "n", "value", "bound"]);
    let seed = cfg.seeds()[0];
    let ball_n = cfg.usize("depth.ball_n")?;
    if ball_n > 0 {
        let ball = sample_features(&DistSpec::Ball { d }, ball_n, SeedSpec::new(seed, 0xba11))?;
        let mut opts = depth_options(cfg, seed)?;
        opts.data_directions = DataDirections::Never;
        let v = DepthIndex::new(&ball, &opts)?.depth(&vec![0.0; d])?;
        let row = checks.len();
        checks.push(vec!["ball_centre".into(), d.into(), ball_n.into(), v.into(), "0.5 +- 0.05".into()]);
        out.verdict(Verdict::new(
            "ball_centre_depth_half",
            Some(13),
            v,
            Check::Within { low: 0.45, high: 0.55 },
            &checks,
            (row, row + 1),
        ));
    }
    let sphere_n = cfg.usize("depth.sphere_n")?;
    if sphere_n > 0 {
        let sph = sample_features(&DistSpec::Sphere { d }, sphere_n, SeedSpec::new(seed, 0x5feb))?;
        let mut opts = depth_options(cfg, seed)?;
        opts.data_directions = DataDirections::Always;
        let index = DepthIndex::new(&sph, &opts)?;
        let mut worst = 0.0f64;
        for r in sph.features().rows() {
            worst = worst.max(index.depth(r.as_slice().expect("standard layout"))?);
        }
        let bound = 1.0 / sphere_n as f64 + 1e-12;
        let row = checks.len();
        checks.push(vec!["sphere_max_depth".into(), d.into(), sphere_n.into(), worst.into(), bound.into()]);
        out.verdict(Verdict::new(
            "sphere_points_have_minimal_depth",
            Some(13),
            worst,
            Check::AtMost { bound },
            &checks,
            (row, row + 1),
        ));
    }
    out.table(scatter);
    out.table(quint);
    out.table(summary);
    out.table(checks);
    Ok(out)
}

fn flat_check(cfg: &ExperimentConfig) -> Result<Output> {
    let d = cfg.usize("dist.d")?;
    let bound_b = cfg.f64("flat.label_bound")?;
    if !(bound_b.is_finite() && bound_b > 0.0) {
        return Err(Error::Config { line: 0, message: "flat.label_bound must be positive".into() });
    }
    let jobs: Vec<(usize, u64)> = cfg
        .usize_list("sweep.n_values")?
        .into_iter()
        .flat_map(|n| cfg.seeds().iter().map(move |&s| (n, s)))
        .collect();
    let results = crate::par::map(jobs.clone(), |(n, seed)| -> Result<Vec<(bool, _, _)>> {
        let x = sample_features(&DistSpec::Sphere { d }, n, SeedSpec::new(seed, DATA_STREAM).child(n as u64))?;
        let mut rng = SeedSpec::new(seed, LABEL_STREAM).child(n as u64).rng();
        let y = Array1::from_shape_simple_fn(n, || rng.random_range(-bound_b..=bound_b));
        let data = x.with_labels(y, None)?;
        [true, false]
            .into_iter()
            .map(|bias| {
                let rep = build_flat_interpolator(&data, bias)?;
                let one_hot = verify_one_hot_activation(&rep, &data).is_ok();
                Ok((bias, rep, one_hot))
            })
            .collect()
    });
    let mut t = Table::new(
        "builds",
        &[
            "n", "seed", "output_bias", "width", "max_interp_error", "lambda_max", "lambda_max_blocks", "bound",
            "excess", "one_hot",
        ],
    )
    .with_plot(PlotSpec::line("seed", "excess").grouped("output_bias").scatter());
    let mut worst_err = 0.0f64;
    let mut worst_excess = [f64::NEG_INFINITY; 2];
    let mut worst_width = f64::NEG_INFINITY;
    let mut worst_route = 0.0f64;
    let mut all_one_hot = true;
    let slack = cfg.f64("verdict.slack")?;
    for ((n, seed), res) in jobs.iter().zip(results) {
        for (bias, rep, one_hot) in res? {
            let bound = (bound_b * bound_b + 2.0) / *n as f64 + if bias { 1.0 } else { 0.0 };
            let lam = rep.lambda_max();
            // Power iteration approaches λ_max from below, so the exact block
            // route is gated as well.
            let excess = lam.max(rep.lambda_max_blocks) - bound;
            worst_err = worst_err.max(rep.max_interp_error);
            worst_excess[usize::from(!bias)] = worst_excess[usize::from(!bias)].max(excess);
            worst_width = worst_width.max(rep.width as f64 - *n as f64);
            worst_route = worst_route.max((lam - rep.lambda_max_blocks).abs() / lam.abs().max(1e-300).max(1.0));
            all_one_hot &= one_hot;
            t.push(vec![
                (*n).into(),
                (*seed).into(),
                bias.into(),
                rep.width.into(),
                rep.max_interp_error.into(),
                lam.into(),
                rep.lambda_max_blocks.into(),
                bound.into(),
                excess.into(),
                one_hot.into(),
            ]);
        }
    }
    let all = (0, t.len());
    let mut out = Output::default();
    out.verdict(Verdict::new(
        "interpolates",
        Some(2),
        worst_err,
        Check::AtMost { bound: cfg.f64("verdict.interp_tol")? },
        &t,
        all,
    ));
    out.verdict(Verdict::new("curvature_bound_with_bias", Some(2), worst_excess[0], Check::AtMost { bound: slack }, &t, all));
    out.verdict(Verdict::new("curvature_bound_without_bias", Some(2), worst_excess[1], Check::AtMost { bound: slack }, &t, all));
    out.verdict(Verdict::new("width_at_most_n", Some(2), worst_width, Check::AtMost { bound: 0.0 }, &t, all));
    out.verdict(
        Verdict::new("block_route_agrees", Some(2), worst_route, Check::AtMost { bound: 1e-6 }, &t, all)
            .with_detail("power iteration vs secular-equation eigenvalue"),
    );
    out.verdict(Verdict::holds("one_hot_activation", Some(2), all_one_hot, &t, all));
    out.table(t);
    Ok(out)
}

fn shatter_rates(cfg: &ExperimentConfig) -> Result<Output> {
    let d = cfg.usize("dist.d")?;
    let alpha = cfg.f64("dist.alpha")?;
    let seed = cfg.seeds()[0];
    let root = SeedSpec::new(seed, 0x5a77);
    let mut out = Output::default();

    // Cap mass and atom norm against ε.
    let mut eps = cfg.f64_list("sweep.eps_values")?;
    eps.sort_by(f64::total_cmp);
    let scaling = cap_scaling_report(d, alpha, &eps, cfg.usize("shatter.mc")?, root.child(0))?;
    let mut cap = Table::new("cap_scaling", &["eps", "mass", "mass_stderr", "atom_l2", "atom_l2_stderr", "hits"])
        .with_plot(PlotSpec::line("eps", "mass").loglog());
    for r in &scaling.rows {
        cap.push(vec![r.eps.into(), r.mass.into(), r.mass_stderr.into(), r.atom_l2.into(), r.atom_l2_stderr.into(), r.hits.into()]);
    }
    out.fits.insert("cap_mass".into(), scaling.mass_fit);
    out.fits.insert("atom_l2".into(), scaling.atom_l2_fit);
    let mass_rate = d as f64 - 1.0 + 2.0 * alpha;
    let atom_rate = (d as f64 + 3.0 + 2.0 * alpha) / 2.0;
    out.verdict(Verdict::new(
        "cap_mass_rate",
        Some(5),
        scaling.mass_fit.slope,
        Check::Within { low: mass_rate - 0.3, high: mass_rate + 0.3 },
        &cap,
        (0, cap.len()),
    ));
    out.verdict(Verdict::new(
        "atom_l2_rate",
        Some(5),
        scaling.atom_l2_fit.slope,
        Check::Within { low: atom_rate - 0.3, high: atom_rate + 0.3 },
        &cap,
        (0, cap.len()),
    ));

    // Packing counts.
    let mut pack = Table::new("packing", &["d", "eps", "count", "theta", "min_angle", "circle_count"])
        .with_plot(PlotSpec::line("eps", "count").grouped("d").loglog());
    let peps = cfg.f64_list("shatter.packing_eps")?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut disjoint = true;
    for (i, &e) in peps.iter().enumerate() {
        let p = pack_caps(d, e, root.child(1).child(i as u64), None)?;
        disjoint &= p.len() < 2 || p.min_angle() >= 2.0 * p.theta - 1e-12;
        xs.push(1.0 / e);
        ys.push(p.len() as f64);
        pack.push(vec![d.into(), e.into(), p.len().into(), p.theta.into(), p.min_angle().into(), Cell::None]);
    }
    let rows_d = (0, pack.len());
    let mut worst_circle = 0.0f64;
    for (i, &e) in peps.iter().enumerate() {
        let p = pack_caps(2, e, root.child(2).child(i as u64), None)?;
        let exact = (std::f64::consts::PI / p.theta).floor();
        worst_circle = worst_circle.max((p.len() as f64 - exact).abs());
        pack.push(vec![2usize.into(), e.into(), p.len().into(), p.theta.into(), p.min_angle().into(), exact.into()]);
    }
    match loglog_fit(&xs, &ys) {
        Some(fit) => {
            out.fits.insert("packing".into(), fit);
            let r = d as f64 - 1.0;
            out.verdict(Verdict::new("packing_rate", Some(6), fit.slope, Check::Within { low: r - 0.4, high: r + 0.4 }, &pack, rows_d));
        }
        None => out.verdict(Verdict::new("packing_rate", Some(6), f64::NAN, Check::AtMost { bound: 0.0 }, &pack, rows_d)),
    }
    out.verdict(Verdict::new("circle_count", Some(6), worst_circle, Check::AtMost { bound: 1.0 }, &pack, (rows_d.1, pack.len())));
    out.verdict(Verdict::holds("caps_disjoint", Some(6), disjoint, &pack, rows_d));

    // Poissonised empty caps and the indistinguishable pair.
    let empty_n = cfg.usize("shatter.empty_n")?;
    let opts = EmptyCapOptions {
        target_lambda: cfg.f64("shatter.target_lambda")?,
        ..Default::default()
    };
    let rep = empty_cap_experiment(empty_n, d, alpha, cfg.usize("shatter.trials")?, root.child(3), &opts)?;
    let mut empty = Table::new("empty_caps", &["trial", "n_poisson", "empty", "fraction", "event", "fixed_n_fraction", "pair_agrees"])
        .with_plot(PlotSpec::line("trial", "fraction"));
    for t in &rep.trials {
        empty.push(vec![
            t.trial.into(),
            t.n_poisson.into(),
            t.empty.into(),
            t.fraction.into(),
            t.event.into(),
            t.fixed_n_fraction.into(),
            t.pair_agrees.map_or(Cell::None, Cell::from),
        ]);
    }
    let all = (0, empty.len());
    out.verdict(
        Verdict::new(
            "empty_fraction_matches_poisson",
            Some(7),
            (rep.mean_fraction - rep.chernoff_reference).abs(),
            Check::AtMost { bound: 0.05 },
            &empty,
            all,
        )
        .with_detail(format!(
            "eps {:.4}, {} caps, lambda_hat {:.4}, mean fraction {:.4}, exp(-lambda_hat) {:.4}",
            rep.eps, rep.n_caps, rep.lambda_hat, rep.mean_fraction, rep.chernoff_reference
        )),
    );
    let t_lambda = opts.target_lambda;
    out.verdict(Verdict::new(
        "lambda_calibrated",
        Some(7),
        rep.lambda_hat / t_lambda,
        Check::Within { low: 0.5, high: 2.0 },
        &empty,
        all,
    ));
    let agrees = rep.trials.iter().all(|t| t.pair_agrees == Some(true));
    out.verdict(Verdict::holds("pair_agrees_on_samples", Some(7), agrees, &empty, all));
    out.verdict(Verdict::new("empty_event_rate", Some(7), rep.event_rate, Check::AtLeast { bound: 0.95 }, &empty, all));

    // Calibrated ε against n.
    let est = CapMassEstimator::new(d, alpha, DEFAULT_CALIBRATION_MC, root.child(4))?;
    let mut calib = Table::new("eps_choice", &["n", "eps", "lambda_hat", "clamped"]).with_plot(PlotSpec::line("n", "eps").loglog());
    let (mut cx, mut cy) = (Vec::new(), Vec::new());
    for n in [100usize, 1000, 10000] {
        let c = choose_eps_with(&est, n, t_lambda)?;
        cx.push(n as f64);
        cy.push(c.eps);
        calib.push(vec![n.into(), c.eps.into(), c.lambda_hat.into(), c.clamped.into()]);
    }
    if let Some(fit) = loglog_fit(&cx, &cy) {
        out.fits.insert("eps_choice".into(), fit);
        let r = -1.0 / mass_rate;
        out.diagnostic("eps_rate", fit.slope, Check::Within { low: r - 0.15, high: r + 0.15 });
    }

    // Separation of the pair against n.
    let mut ns = cfg.usize_list("sweep.n_values")?;
    ns.sort_unstable();
    let sep = separation_scan(&ns, d, alpha, cfg.usize("shatter.separation_trials")?, cfg.usize("shatter.separation_mc")?, root.child(5))?;
    let mut st = Table::new("separation", &["n", "eps", "lambda_hat", "n_caps", "mean_empty", "sep_mc", "sep_mc_stderr", "sep_disjoint"])
        .with_plot(PlotSpec::line("n", "sep_mc").loglog());
    for r in &sep.rows {
        st.push(vec![
            r.n.into(),
            r.eps.into(),
            r.lambda_hat.into(),
            r.n_caps.into(),
            r.mean_empty.into(),
            r.sep_mc.into(),
            r.sep_mc_stderr.into(),
            r.sep_disjoint.into(),
        ]);
    }
    out.fits.insert("separation".into(), sep.fit);
    out.fits.insert("separation_disjoint".into(), sep.fit_disjoint);
    let r = -2.0 * alpha / mass_rate;
    out.verdict(Verdict::new("separation_rate", Some(8), sep.fit.slope, Check::Within { low: r - 0.3, high: r + 0.3 }, &st, (0, st.len())));

    out.table(cap);
    out.table(pack);
    out.table(empty);
    out.table(calib);
    out.table(st);
    Ok(out)
}

fn g_suite(cfg: &ExperimentConfig) -> Result<Output> {
    let seed = cfg.seeds()[0];
    let root = SeedSpec::new(seed, 0x6507);
    let n_mc = cfg.usize("g.mc")?;
    let mut out = Output::default();

    // Global g dominates each component's local g.
    let dd = cfg.usize("g.domination_d")?;
    let mix = MixtureSpec::uniform(dd, cfg.usize("g.domination_m")?, cfg.usize("g.domination_components")?, seed);
    let spec = DistSpec::MixtureBalls(mix.clone());
    spec.validate()?;
    let total = cfg.usize("g.probes")?;
    let n_thr = 10usize.min(total.max(1));
    let probes = probe_grid(dd, total.div_ceil(n_thr), n_thr, 1.0, root.child(0));
    let probes = &probes[..total.min(probes.len())];
    let mut dom = Table::new(
        "domination",
        &["component", "probe", "t", "g", "g_stderr", "g_j", "g_j_stderr", "raw_margin", "adjusted_margin"],
    )
    .with_plot(PlotSpec::line("t", "raw_margin").grouped("component").scatter());
    for j in 0..mix.components() {
        let rep = g_domination_check(&spec, j, probes, n_mc, root.child(1).child(j as u64))?;
        let start = dom.len();
        for r in &rep.rows {
            dom.push(vec![
                j.into(),
                r.probe.into(),
                r.t.into(),
                r.g.into(),
                r.g_stderr.into(),
                r.g_j.into(),
                r.g_j_stderr.into(),
                r.raw_margin.into(),
                r.adjusted_margin.into(),
            ]);
        }
        out.verdict(
            Verdict::new(
                &format!("global_g_dominates_component{j}"),
                Some(12),
                rep.worst_adjusted,
                Check::AtLeast { bound: 0.0 },
                &dom,
                (start, dom.len()),
            )
            .with_detail(format!("worst raw margin {:.3e}, p_j {}", rep.worst_raw, rep.p_j)),
        );
    }

    // Sup deviation of the empirical g from the population g.
    let mut ns = cfg.usize_list("sweep.n_values")?;
    ns.sort_unstable();
    let dev_opts = DeviationOptions {
        n_pop: cfg.usize("g.deviation_pop")?,
        reps: cfg.usize("g.deviation_reps")?,
        ..Default::default()
    };
    let scan = g_deviation_scan(&DistSpec::Ball { d: cfg.usize("g.deviation_d")? }, &ns, &dev_opts, root.child(2))?;
    let mut dev = Table::new("deviation", &["n", "rep", "sup_deviation"]);
    for (n, r, v) in &scan.rows {
        dev.push(vec![(*n).into(), (*r).into(), (*v).into()]);
    }
    let mut devm = Table::new("deviation_means", &["n", "mean_sup_deviation"]).with_plot(PlotSpec::line("n", "mean_sup_deviation").loglog());
    for (n, v) in &scan.means {
        devm.push(vec![(*n).into(), (*v).into()]);
    }
    out.fits.insert("g_deviation".into(), scan.fit);
    out.verdict(Verdict::new(
        "g_deviation_rate",
        Some(12),
        scan.fit.slope,
        Check::Within { low: -0.7, high: -0.3 },
        &devm,
        (0, devm.len()),
    ));

    // Population g near the boundary of a Beta-radial law.
    let d = cfg.usize("dist.d")?;
    let alpha = cfg.f64("dist.alpha")?;
    let mut ts = cfg.f64_list("g.thresholds")?;
    ts.sort_by(f64::total_cmp);
    let mut u = vec![0.0; d];
    u[0] = 1.0;
    let curve = g_population_curve(&DistSpec::BetaRadial { d, alpha }, &u, &ts, n_mc, root.child(3))?;
    let mut pg = Table::new("population_g", &["t", "one_minus_t", "g", "g_stderr", "p"]).with_plot(PlotSpec::line("one_minus_t", "g").loglog());
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (t, e) in ts.iter().zip(&curve) {
        pg.push(vec![(*t).into(), (1.0 - t).into(), e.estimate.into(), e.stderr.into(), e.p.into()]);
        xs.push(1.0 - t);
        ys.push(e.estimate);
    }
    let rate = 2.0 * alpha + d as f64;
    let slope = match loglog_fit(&xs, &ys) {
        Some(fit) => {
            out.fits.insert("population_g".into(), fit);
            fit.slope
        }
        None => f64::NAN,
    };
    out.verdict(Verdict::new(
        "population_g_boundary_rate",
        Some(12),
        slope,
        Check::Within { low: rate - 0.3, high: rate + 0.3 },
        &pg,
        (0, pg.len()),
    ));
    out.table(dom);
    out.table(dev);
    out.table(devm);
    out.table(pg);
    Ok(out)
}

/// Central finite difference of the gradient along a random unit direction
/// against the Hessian-vector product, plus the symmetry defect a·Hb − b·Ha.
fn hvp_checks(net: &Network, data: &Dataset, seed: SeedSpec) -> Result<(f64, f64)> {
    let p = net.n_params();
    let mut rng = seed.rng();
    let a = unit_vector(&mut rng, p);
    let b = unit_vector(&mut rng, p);
    let ha = hvp(net, data, &a)?.value;
    let hb = hvp(net, data, &b)?.value;
    let h = 1e-5;
    let shifted = |s: f64| -> Result<Vec<f64>> {
        let mut n2 = net.clone();
        n2.axpy(s * h, &a);
        Ok(loss_and_grad(&n2, data)?.1)
    };
    let (gp, gm) = (shifted(1.0)?, shifted(-1.0)?);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..p {
        let fd = (gp[i] - gm[i]) / (2.0 * h);
        num += (fd - ha[i]).powi(2);
        den += ha[i].powi(2);
    }
    let rel = num.sqrt() / den.sqrt().max(1e-12);
    let ahb: f64 = a.iter().zip(&hb).map(|(x, y)| x * y).sum();
    let bha: f64 = b.iter().zip(&ha).map(|(x, y)| x * y).sum();
    let sym = (ahb - bha).abs() / ahb.abs().max(bha.abs()).max(1e-12);
    Ok((rel, sym))
}

fn csv_vs_gaussian(cfg: &ExperimentConfig) -> Result<Output> {
    let path = cfg.path("csv.path")?;
    let raw = load_csv_dataset(&path, cfg.usize("csv.label_column")?, None)?;
    let scale = match cfg.text("csv.scale")? {
        "auto" => {
            if raw.radius() > 0.0 {
                1.0 / raw.radius()
            } else {
                1.0
            }
        }
        s => s.parse::<f64>().map_err(|_| Error::Config {
            line: 0,
            message: format!("csv.scale must be a number or auto, got `{s}`"),
        })?,
    };
    let csv = raw.scaled(scale)?;
    let d = csv.dim();
    let teacher = cfg.teacher(d)?;
    let eta = cfg.f64("train.eta")?;
    let mut jobs = Vec::new();
    for n in cfg.usize_list("sweep.n_values")? {
        let n = if n == 0 { csv.n() } else { n };
        if n > csv.n() {
            return Err(Error::Config {
                line: 0,
                message: format!("sweep.n_values asks for {n} rows but the CSV has {}", csv.n()),
            });
        }
        for &s in cfg.seeds() {
            for g in 0..2 {
                jobs.push((n, s, g));
            }
        }
    }
    let results = crate::par::map(jobs.clone(), |(n, seed, g)| -> Result<_> {
        let rows: Vec<usize> = (0..n).collect();
        let x = if g == 0 {
            csv.select(&rows)?
        } else {
            // Gaussian features rescaled to the CSV's mean squared norm.
            let gx = sample_features(&DistSpec::Gaussian { d }, n, SeedSpec::new(seed, DATA_STREAM).child(n as u64))?;
            let ms = |ds: &Dataset| ds.features().rows().into_iter().map(|r| r.dot(&r)).sum::<f64>() / n as f64;
            let target = ms(&csv.select(&rows)?);
            let s = (target / ms(&gx)).sqrt();
            gx.scaled(if s.is_finite() { s } else { 1.0 })?
        };
        let data = label_dataset(x, &teacher, SeedSpec::new(seed, LABEL_STREAM).child(n as u64))?;
        let net0 = init_net(cfg, d, seed, n as u64)?;
        let probe = probe_of(cfg, seed)?.expect("csv_vs_gaussian has probe keys");
        let o = train(cfg, &net0, &data, Some(&probe), Some(eta))?;
        let post = match &o.final_net {
            Some(net) => {
                let (rel, sym) = hvp_checks(net, &data, SeedSpec::new(seed, PROBE_STREAM).child(1))?;
                let lam = probe.lambda_max(net, &data)?;
                let b = beos_bound_check(net, &data, eta, None)?.bound.expect("bound requested");
                Some((rel, sym, lam, b.lhs, b.rhs))
            }
            None => None,
        };
        Ok((o, post))
    });
    let mut traj = trajectory_table();
    let mut fin = Table::new(
        "final",
        &["geometry", "n", "seed", "train_loss", "true_mse", "hvp_rel_error", "symmetry_defect", "lambda_max", "path_norm", "bound_rhs"],
    );
    let mut bounds = bound_table();
    let mut worst_rel = 0.0f64;
    let mut worst_sym = 0.0f64;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut diverged = false;
    for ((n, seed, g), res) in jobs.into_iter().zip(results) {
        let (o, post) = res?;
        let name = if g == 0 { "csv" } else { "gaussian" };
        push_trajectory(&mut traj, name, n, seed, &o);
        push_bounds(&mut bounds, name, n, seed, &o, &mut worst_excess);
        diverged |= o.diverged.is_some();
        let (rel, sym, lam, lhs, rhs) = post.unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN));
        worst_rel = worst_rel.max(rel);
        worst_sym = worst_sym.max(sym);
        if lam <= 2.0 / eta {
            worst_excess = worst_excess.max(lhs - rhs);
        }
        fin.push(vec![
            name.into(),
            n.into(),
            seed.into(),
            o.final_loss().into(),
            o.final_true_mse().into(),
            rel.into(),
            sym.into(),
            lam.into(),
            lhs.into(),
            rhs.into(),
        ]);
    }
    let all = (0, fin.len());
    let mut out = Output::default();
    out.verdict(Verdict::holds("no_divergence", Some(4), !diverged, &fin, all));
    out.verdict(Verdict::new("hvp_matches_finite_difference", Some(3), if diverged { f64::NAN } else { worst_rel }, Check::AtMost { bound: cfg.f64("verdict.hvp_tol")? }, &fin, all));
    out.verdict(Verdict::new("hessian_symmetric", Some(3), if diverged { f64::NAN } else { worst_sym }, Check::AtMost { bound: 1e-10 }, &fin, all));
    out.verdict(
        Verdict::new("path_norm_bound_below_edge", Some(4), worst_excess, Check::AtMost { bound: 1e-8 }, &bounds, (0, bounds.len()))
            .with_detail("checked at probed epochs and the final network whenever lambda_max <= 2/eta; -inf means none qualified"),
    );
    out.table(traj);
    out.table(fin);
    out.table(bounds);
    Ok(out)
}

fn bound_table() -> Table {
    Table::new(
        "bound",
        &["geometry", "n", "seed", "epoch", "lambda_max", "below_edge", "path_norm", "rhs", "loss", "radius", "satisfied"],
    )
    .with_plot(PlotSpec::line("epoch", "path_norm").grouped("seed"))
}

fn push_bounds(t: &mut Table, geometry: &str, n: usize, seed: u64, o: &TrainOutcome, worst: &mut f64) {
    for b in &o.bounds {
        if b.below_edge {
            *worst = worst.max(b.lhs - b.rhs);
        }
        t.push(vec![
            geometry.into(),
            n.into(),
            seed.into(),
            b.epoch.into(),
            b.lambda_max.into(),
            b.below_edge.into(),
            b.lhs.into(),
            b.rhs.into(),
            b.loss.into(),
            b.radius.into(),
            (b.lhs <= b.rhs + 1e-8).into(),
        ]);
    }
}

fn beos_bound(cfg: &ExperimentConfig) -> Result<Output> {
    let tc = cfg.train_config()?;
    if tc.lambda_max_every.is_none() {
        return Err(Error::Config { line: 0, message: "beos_bound needs train.lambda_max_every".into() });
    }
    let spec = cfg.dist_with(None, None)?;
    let d = spec.dim();
    let teacher = cfg.teacher(d)?;
    let eta = tc.eta;
    let jobs: Vec<(usize, u64)> = cfg
        .usize_list("sweep.n_values")?
        .into_iter()
        .flat_map(|n| cfg.seeds().iter().map(move |&s| (n, s)))
        .collect();
    let results = crate::par::map(jobs.clone(), |(n, seed)| -> Result<TrainOutcome> {
        let data = labelled_sample(&spec, &teacher, n, seed, n as u64)?;
        let net0 = init_net(cfg, d, seed, n as u64)?;
        let probe = probe_of(cfg, seed)?.expect("beos_bound has probe keys");
        train(cfg, &net0, &data, Some(&probe), Some(eta))
    });
    let mut traj = trajectory_table();
    let mut bounds = bound_table();
    let mut worst = f64::NEG_INFINITY;
    let mut diverged = false;
    for ((n, seed), res) in jobs.into_iter().zip(results) {
        let o = res?;
        let name = spec.label();
        push_trajectory(&mut traj, &name, n, seed, &o);
        push_bounds(&mut bounds, &name, n, seed, &o, &mut worst);
        diverged |= o.diverged.is_some();
    }
    let below = bounds
        .rows
        .iter()
        .filter(|r| r[bounds.column_index("below_edge").expect("column")] == "true")
        .count();
    let all = (0, bounds.len());
    let slack = cfg.f64("verdict.slack")?;
    let mut out = Output::default();
    out.verdict(Verdict::holds("no_divergence", Some(4), !diverged, &traj, (0, traj.len())));
    out.verdict(
        Verdict::new("path_norm_bound_below_edge", Some(4), worst, Check::AtMost { bound: slack }, &bounds, all)
            .with_detail(format!("{below} of {} probed epochs below the edge", bounds.len())),
    );
    out.verdict(Verdict::new("probes_below_edge", Some(4), below as f64, Check::AtLeast { bound: 1.0 }, &bounds, all));
    out.table(traj);
    out.table(bounds);
    Ok(out)
}
