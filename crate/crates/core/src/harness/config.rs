//! Flat `key = value` experiment configuration.
//!
//! Each experiment declares its key schema. Unknown keys, duplicates and
//! malformed values are hard errors carrying the offending line, because a
//! silently ignored typo would invalidate a slope comparison.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::data::{DistSpec, MixtureSpec, Teacher, TeacherSpec};
use crate::numerics::SeedSpec;
use crate::train::TrainConfig;
use crate::{Error, Result};

/// Registered experiment recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    SlopeVsN,
    AlphaSweep,
    SphereVsLines,
    DepthError,
    FlatCheck,
    ShatterRates,
    GSuite,
    CsvVsGaussian,
    BeosBound,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::SlopeVsN,
        Experiment::AlphaSweep,
        Experiment::SphereVsLines,
        Experiment::DepthError,
        Experiment::FlatCheck,
        Experiment::ShatterRates,
        Experiment::GSuite,
        Experiment::CsvVsGaussian,
        Experiment::BeosBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SlopeVsN => "slope_vs_n",
            Experiment::AlphaSweep => "alpha_sweep",
            Experiment::SphereVsLines => "sphere_vs_lines",
            Experiment::DepthError => "depth_error",
            Experiment::FlatCheck => "flat_check",
            Experiment::ShatterRates => "shatter_rates",
            Experiment::GSuite => "g_suite",
            Experiment::CsvVsGaussian => "csv_vs_gaussian",
            Experiment::BeosBound => "beos_bound",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| Error::Registry {
                name: name.to_string(),
                known: Self::ALL.map(|e| e.name()).join(", "),
            })
    }

    /// The accepted keys, in documentation order.
    pub fn schema(self) -> Vec<KeySpec> {
        use Experiment::*;
        let mut keys = vec![
            KeySpec::new("experiment", Kind::Text, None, "recipe name"),
            KeySpec::new("seeds", Kind::IntList, Some("0"), "distinct master seeds, one replicate each"),
        ];
        match self {
            SlopeVsN | AlphaSweep | DepthError | BeosBound => {
                let (kind, d) = match self {
                    AlphaSweep => ("beta_radial", "5"),
                    _ => ("mixture", "10"),
                };
                keys.extend(dist_keys(kind, d));
                keys.extend(teacher_keys("quadratic"));
                keys.extend(net_keys("256"));
                keys.extend(train_keys("5000", if self == BeosBound { "100" } else { "none" }));
            }
            SphereVsLines => {
                keys.push(KeySpec::new("dist.d", Kind::Int, Some("50"), "ambient dimension of both geometries"));
                keys.push(KeySpec::new("dist.components", Kind::Int, Some("20"), "number of lines"));
                keys.push(KeySpec::new("dist.m", Kind::Int, Some("1"), "dimension of each mixture component"));
                keys.push(KeySpec::new("dist.subspace_seed", Kind::Int, Some("5"), "seed of the random line directions"));
                keys.extend(teacher_keys("quadratic"));
                keys.extend(net_keys("512"));
                keys.extend(train_keys("10000", "none"));
            }
            CsvVsGaussian => {
                keys.push(KeySpec::new("csv.path", Kind::Text, None, "CSV file; relative paths resolve against the config file"));
                keys.push(KeySpec::new("csv.label_column", Kind::Int, Some("0"), "0-based column ignored as features"));
                keys.push(KeySpec::new("csv.scale", Kind::Text, Some("auto"), "feature scale factor, or auto to fit the unit ball"));
                keys.extend(teacher_keys("relu"));
                keys.extend(net_keys("256"));
                keys.extend(train_keys("2000", "none"));
            }
            FlatCheck | ShatterRates | GSuite => {}
        }
        if matches!(self, SphereVsLines | BeosBound | CsvVsGaussian) {
            keys.extend(probe_keys());
        }
        match self {
            SlopeVsN => {
                keys.push(KeySpec::new("sweep.n_values", Kind::IntList, Some("200,400,800,1600,3200"), "training-set sizes"));
                keys.push(KeySpec::new("sweep.d_values", Kind::IntList, Some("10,50"), "ambient dimensions (override dist.d)"));
                keys.push(KeySpec::new("verdict.max_spread", Kind::Float, Some("0.15"), "largest allowed slope difference across d"));
                keys.push(KeySpec::new("verdict.max_slope", Kind::Float, Some("-0.05"), "every fitted slope must be at most this"));
            }
            AlphaSweep => {
                keys.push(KeySpec::new("sweep.n_values", Kind::IntList, Some("200,400,800,1600,3200"), "training-set sizes"));
                keys.push(KeySpec::new("sweep.alpha_values", Kind::FloatList, Some("1,10"), "Beta-radial exponents (override dist.alpha)"));
                keys.push(KeySpec::new("verdict.min_gap", Kind::Float, Some("0.05"), "each larger alpha must lower the slope by at least this"));
            }
            SphereVsLines => {
                keys.push(KeySpec::new("sweep.n_values", Kind::IntList, Some("2000"), "training-set sizes"));
                keys.push(KeySpec::new("verdict.sphere_low", Kind::Float, Some("0.85"), "lower limit of the sphere's final true MSE"));
                keys.push(KeySpec::new("verdict.sphere_high", Kind::Float, Some("1.15"), "upper limit of the sphere's final true MSE"));
                keys.push(KeySpec::new("verdict.lines_max", Kind::Float, Some("0.3"), "upper limit of the lines' final true MSE"));
            }
            DepthError => {
                keys.push(KeySpec::new("sweep.n_values", Kind::IntList, Some("1000"), "training-set sizes"));
                keys.push(KeySpec::new("depth.n_directions", Kind::Int, Some("512"), "random candidate directions"));
                keys.push(KeySpec::new("depth.data_directions", Kind::Choice(&["auto", "always", "never"]), Some("auto"), "add data-point directions"));
                keys.push(KeySpec::new("depth.ball_n", Kind::Int, Some("10000"), "ball sample for the centre-depth check (0 skips)"));
                keys.push(KeySpec::new("depth.sphere_n", Kind::Int, Some("500"), "sphere sample for the boundary-depth check (0 skips)"));
            }
            FlatCheck => {
                keys.push(KeySpec::new("dist.d", Kind::Int, Some("20"), "sphere dimension"));
                keys.push(KeySpec::new("sweep.n_values", Kind::IntList, Some("200"), "sample sizes"));
                keys.push(KeySpec::new("flat.label_bound", Kind::Float, Some("1"), "labels are Uniform[-bound, bound]"));
                keys.push(KeySpec::new("verdict.interp_tol", Kind::Float, Some("1e-9"), "largest allowed interpolation error"));
                keys.push(KeySpec::new("verdict.slack", Kind::Float, Some("1e-6"), "slack on the curvature bound"));
            }
            ShatterRates => {
                keys.push(KeySpec::new("dist.d", Kind::Int, Some("4"), "ambient dimension"));
                keys.push(KeySpec::new("dist.alpha", Kind::Float, Some("1"), "Beta-radial exponent"));
                keys.push(KeySpec::new("sweep.eps_values", Kind::FloatList, Some("0.05,0.075,0.1,0.15,0.2,0.3,0.4"), "cap scales for the mass and atom fits"));
                keys.push(KeySpec::new("sweep.n_values", Kind::IntList, Some("100,316,1000,3162,10000"), "sample sizes for the separation fit"));
                keys.push(KeySpec::new("shatter.mc", Kind::Int, Some("1000000"), "Monte-Carlo draws per cap scale"));
                keys.push(KeySpec::new("shatter.packing_eps", Kind::FloatList, Some("0.4,0.28,0.2,0.14,0.1"), "cap scales for the packing-rate fit"));
                keys.push(KeySpec::new("shatter.empty_n", Kind::Int, Some("10000"), "Poisson mean of the empty-cap experiment"));
                keys.push(KeySpec::new("shatter.trials", Kind::Int, Some("50"), "Poisson trials"));
                keys.push(KeySpec::new("shatter.target_lambda", Kind::Float, Some("1"), "expected points per cap"));
                keys.push(KeySpec::new("shatter.separation_trials", Kind::Int, Some("10"), "trials per sample size in the separation fit"));
                keys.push(KeySpec::new("shatter.separation_mc", Kind::Int, Some("200000"), "Monte-Carlo draws per separation estimate"));
            }
            GSuite => {
                keys.push(KeySpec::new("dist.d", Kind::Int, Some("4"), "dimension of the population-g slope check"));
                keys.push(KeySpec::new("dist.alpha", Kind::Float, Some("1"), "Beta-radial exponent of the slope check"));
                keys.push(KeySpec::new("g.mc", Kind::Int, Some("400000"), "Monte-Carlo draws per population estimate"));
                keys.push(KeySpec::new("g.domination_d", Kind::Int, Some("6"), "mixture dimension for the domination check"));
                keys.push(KeySpec::new("g.domination_m", Kind::Int, Some("2"), "component dimension"));
                keys.push(KeySpec::new("g.domination_components", Kind::Int, Some("2"), "number of components"));
                keys.push(KeySpec::new("g.probes", Kind::Int, Some("200"), "probe (direction, threshold) pairs"));
                keys.push(KeySpec::new("g.deviation_d", Kind::Int, Some("4"), "ball dimension of the deviation scan"));
                keys.push(KeySpec::new("g.deviation_pop", Kind::Int, Some("2000000"), "population sample of the deviation scan"));
                keys.push(KeySpec::new("g.deviation_reps", Kind::Int, Some("5"), "empirical replicates per sample size"));
                keys.push(KeySpec::new("sweep.n_values", Kind::IntList, Some("1000,4000,16000,64000"), "sample sizes of the deviation scan"));
                keys.push(KeySpec::new("g.thresholds", Kind::FloatList, Some("0.6,0.65,0.7,0.75,0.8,0.85,0.9"), "thresholds of the population slope check"));
            }
            CsvVsGaussian => {
                keys.push(KeySpec::new("sweep.n_values", Kind::IntList, Some("0"), "rows used from the CSV (0 means all)"));
                keys.push(KeySpec::new("verdict.hvp_tol", Kind::Float, Some("1e-5"), "relative finite-difference tolerance of the HVP check"));
            }
            BeosBound => {
                keys.push(KeySpec::new("sweep.n_values", Kind::IntList, Some("1000"), "training-set sizes"));
                keys.push(KeySpec::new("verdict.slack", Kind::Float, Some("1e-8"), "slack on the path-norm bound"));
            }
        }
        keys
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Text,
    FloatList,
    IntList,
    /// A float or `none`.
    OptFloat,
    /// An integer or `none`.
    OptInt,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone)]
pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub doc: &'static str,
}

impl KeySpec {
    const fn new(key: &'static str, kind: Kind, default: Option<&'static str>, doc: &'static str) -> Self {
        Self { key, kind, default, doc }
    }
}

fn dist_keys(kind: &'static str, d: &'static str) -> Vec<KeySpec> {
    vec![
        KeySpec::new(
            "dist.kind",
            Kind::Choice(&["mixture", "beta_radial", "sphere", "ball", "gaussian"]),
            Some(kind),
            "feature distribution",
        ),
        KeySpec::new("dist.d", Kind::Int, Some(d), "ambient dimension"),
        KeySpec::new("dist.alpha", Kind::Float, Some("1"), "Beta-radial exponent"),
        KeySpec::new("dist.m", Kind::Int, Some("1"), "dimension of each mixture component"),
        KeySpec::new("dist.components", Kind::Int, Some("20"), "number of mixture components"),
        KeySpec::new("dist.subspace_seed", Kind::Int, Some("5"), "seed of the component subspaces"),
        KeySpec::new("dist.affine_offsets", Kind::Bool, Some("false"), "shift components off the origin"),
    ]
}

fn teacher_keys(kind: &'static str) -> Vec<KeySpec> {
    vec![
        KeySpec::new("teacher.kind", Kind::Choice(&["quadratic", "relu"]), Some(kind), "ground-truth function"),
        KeySpec::new("teacher.width", Kind::Int, Some("8"), "hidden width of a ReLU teacher"),
        KeySpec::new("teacher.scale", Kind::Float, Some("1"), "initialisation scale of a ReLU teacher"),
        KeySpec::new("teacher.seed", Kind::Int, Some("1"), "seed of the teacher weights"),
        KeySpec::new("teacher.noise_sigma", Kind::Float, Some("1"), "label noise standard deviation"),
    ]
}

fn net_keys(width: &'static str) -> Vec<KeySpec> {
    vec![
        KeySpec::new("net.width", Kind::Int, Some(width), "hidden width"),
        KeySpec::new("net.init_scale", Kind::Float, Some("1"), "initialisation scale"),
        KeySpec::new("net.has_output_bias", Kind::Bool, Some("true"), "train an output bias"),
    ]
}

fn train_keys(epochs: &'static str, lambda_every: &'static str) -> Vec<KeySpec> {
    vec![
        KeySpec::new("train.mode", Kind::Choice(&["gd", "stub"]), Some("gd"), "gd trains; stub returns stub.coef * n^stub.exponent"),
        KeySpec::new("train.eta", Kind::Float, Some("0.4"), "learning rate"),
        KeySpec::new("train.epochs", Kind::Int, Some(epochs), "full-batch epochs"),
        KeySpec::new("train.clip_norm", Kind::OptFloat, Some("50"), "gradient-norm clip, or none"),
        KeySpec::new("train.eval_every", Kind::Int, Some("100"), "record interval in epochs"),
        KeySpec::new("train.lambda_max_every", Kind::OptInt, Some(lambda_every), "curvature probe interval, or none"),
        KeySpec::new("stub.exponent", Kind::Float, Some("-0.5"), "stub power-law exponent"),
        KeySpec::new("stub.coef", Kind::Float, Some("1"), "stub power-law coefficient"),
    ]
}

fn probe_keys() -> Vec<KeySpec> {
    vec![
        KeySpec::new("probe.tol", Kind::Float, Some("1e-8"), "relative tolerance of the curvature power iteration"),
        KeySpec::new("probe.max_iter", Kind::Int, Some("5000"), "iteration cap of the curvature power iteration"),
    ]
}

/// A parsed configuration with every schema key resolved to a canonical value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    experiment: Experiment,
    values: BTreeMap<String, String>,
    seeds: Vec<u64>,
    /// Directory relative paths in the config resolve against.
    base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse_in(&text, base)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_in(text, PathBuf::from("."))
    }

    /// Parse `text`, resolving relative paths against `base_dir`.
    pub fn parse_in(text: &str, base_dir: PathBuf) -> Result<Self> {
        let mut raw: Vec<(usize, String, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: lineno,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(Error::Config {
                    line: lineno,
                    message: "empty key or value".into(),
                });
            }
            if let Some((first, ..)) = raw.iter().find(|(_, key, _)| key == k) {
                return Err(Error::Config {
                    line: lineno,
                    message: format!("duplicate key `{k}` (first set on line {first})"),
                });
            }
            raw.push((lineno, k.to_string(), v.to_string()));
        }
        let exp_name = raw
            .iter()
            .find(|(_, k, _)| k == "experiment")
            .map(|(_, _, v)| v.clone())
            .ok_or_else(|| Error::Config {
                line: 0,
                message: "missing required key `experiment`".into(),
            })?;
        let experiment = Experiment::from_name(&exp_name)?;
        let schema = experiment.schema();
        let mut values = BTreeMap::new();
        for (line, k, v) in &raw {
            let spec = schema.iter().find(|s| s.key == k).ok_or_else(|| Error::Config {
                line: *line,
                message: format!("unknown key `{k}` for experiment {experiment}"),
            })?;
            let canon = canonical(spec.kind, v).map_err(|message| Error::Config {
                line: *line,
                message: format!("`{k}`: {message}"),
            })?;
            values.insert(k.clone(), canon);
        }
        for spec in &schema {
            if values.contains_key(spec.key) {
                continue;
            }
            let default = spec.default.ok_or_else(|| Error::Config {
                line: 0,
                message: format!("missing required key `{}` for experiment {experiment}", spec.key),
            })?;
            let canon = canonical(spec.kind, default).expect("schema defaults are well-formed");
            values.insert(spec.key.to_string(), canon);
        }
        let seeds = parse_list::<u64>(&values["seeds"]).expect("validated");
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config {
                line: line_of(&raw, "seeds"),
                message: "seeds must be distinct".into(),
            });
        }
        let cfg = Self {
            experiment,
            values,
            seeds,
            base_dir,
        };
        cfg.check_semantics(&raw)?;
        Ok(cfg)
    }

    fn check_semantics(&self, raw: &[(usize, String, String)]) -> Result<()> {
        let fail = |key: &str, message: String| Error::Config {
            line: line_of(raw, key),
            message,
        };
        if self.values.contains_key("train.eta") {
            self.train_config().map_err(|e| fail("train.eta", e.to_string()))?;
        }
        if self.values.contains_key("net.width") && self.usize("net.width")? == 0 {
            return Err(fail("net.width", "net.width must be at least 1".into()));
        }
        if self.values.contains_key("dist.kind") {
            self.dist_with(None, None).map_err(|e| fail("dist.kind", e.to_string()))?;
        }
        Ok(())
    }

    pub fn experiment(&self) -> Experiment {
        self.experiment
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    /// Every schema key with its resolved canonical value.
    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Canonical `key = value` echo; the manifest hash is computed from it.
    pub fn canonical_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.values.get(key).map(String::as_str).ok_or_else(|| Error::Config {
            line: 0,
            message: format!("experiment {} has no key `{key}`", self.experiment),
        })
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        Ok(self.raw(key)?.parse().expect("validated float"))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        Ok(self.raw(key)?.parse().expect("validated integer"))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        Ok(self.raw(key)?.parse().expect("validated integer"))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        Ok(self.raw(key)? == "true")
    }

    pub fn text(&self, key: &str) -> Result<&str> {
        self.raw(key)
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        let v = self.raw(key)?;
        Ok((v != "none").then(|| v.parse().expect("validated float")))
    }

    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        let v = self.raw(key)?;
        Ok((v != "none").then(|| v.parse().expect("validated integer")))
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        Ok(parse_list(self.raw(key)?).expect("validated list"))
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        Ok(parse_list(self.raw(key)?).expect("validated list"))
    }

    /// A path-valued key resolved against the config file's directory.
    pub fn path(&self, key: &str) -> Result<PathBuf> {
        let p = PathBuf::from(self.raw(key)?);
        Ok(if p.is_absolute() { p } else { self.base_dir.join(p) })
    }

    /// The configured feature distribution with optional overrides of `d` and `alpha`.
    pub fn dist_with(&self, d: Option<usize>, alpha: Option<f64>) -> Result<DistSpec> {
        let d = match d {
            Some(d) => d,
            None => self.usize("dist.d")?,
        };
        let spec = match self.text("dist.kind")? {
            "beta_radial" => DistSpec::BetaRadial {
                d,
                alpha: match alpha {
                    Some(a) => a,
                    None => self.f64("dist.alpha")?,
                },
            },
            "mixture" => {
                let mut mix = MixtureSpec::uniform(
                    d,
                    self.usize("dist.m")?,
                    self.usize("dist.components")?,
                    self.u64("dist.subspace_seed")?,
                );
                mix.affine_offsets = self.bool("dist.affine_offsets")?;
                DistSpec::MixtureBalls(mix)
            }
            "sphere" => DistSpec::Sphere { d },
            "ball" => DistSpec::Ball { d },
            "gaussian" => DistSpec::Gaussian { d },
            other => unreachable!("validated choice {other}"),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The configured teacher in dimension `d`.
    pub fn teacher(&self, d: usize) -> Result<TeacherSpec> {
        let seed = SeedSpec::new(self.u64("teacher.seed")?, 0x7eac);
        let teacher = match self.text("teacher.kind")? {
            "quadratic" => Teacher::random_quadratic(d, seed),
            "relu" => Teacher::random_relu(d, self.usize("teacher.width")?, self.f64("teacher.scale")?, seed)?,
            other => unreachable!("validated choice {other}"),
        };
        Ok(TeacherSpec {
            teacher,
            noise_sigma: self.f64("teacher.noise_sigma")?,
        })
    }

    /// The configured optimiser settings (seeded per replicate by the recipe).
    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            eta: self.f64("train.eta")?,
            epochs: self.usize("train.epochs")?,
            clip_norm: self.opt_f64("train.clip_norm")?,
            eval_every: self.usize("train.eval_every")?,
            lambda_max_every: self.opt_usize("train.lambda_max_every")?,
            init_scale: self.f64("net.init_scale")?,
            seed: SeedSpec::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn line_of(raw: &[(usize, String, String)], key: &str) -> usize {
    raw.iter().find(|(_, k, _)| k == key).map_or(0, |(l, ..)| *l)
}

fn parse_list<T: std::str::FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| format!("cannot parse list element `{s}`")))
        .collect()
}

fn canon_float(v: &str) -> std::result::Result<String, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got `{v}`"))?;
    if !x.is_finite() {
        return Err(format!("expected a finite number, got `{v}`"));
    }
    Ok(format!("{x:?}"))
}

fn canon_int(v: &str) -> std::result::Result<String, String> {
    let x: u64 = v.parse().map_err(|_| format!("expected a nonnegative integer, got `{v}`"))?;
    Ok(x.to_string())
}

fn canonical(kind: Kind, v: &str) -> std::result::Result<String, String> {
    match kind {
        Kind::Float => canon_float(v),
        Kind::Int => canon_int(v),
        Kind::Bool => match v {
            "true" | "false" => Ok(v.to_string()),
            _ => Err(format!("expected true or false, got `{v}`")),
        },
        Kind::Text => Ok(v.to_string()),
        Kind::OptFloat if v == "none" => Ok("none".into()),
        Kind::OptInt if v == "none" => Ok("none".into()),
        Kind::OptFloat => canon_float(v),
        Kind::OptInt => canon_int(v),
        Kind::Choice(options) => {
            if options.contains(&v) {
                Ok(v.to_string())
            } else {
                Err(format!("expected one of {}, got `{v}`", options.join(", ")))
            }
        }
        Kind::FloatList | Kind::IntList => {
            let items: Vec<&str> = v.split(',').map(str::trim).collect();
            if items.iter().any(|s| s.is_empty()) {
                return Err("empty list element".into());
            }
            let canon: std::result::Result<Vec<String>, String> = items
                .iter()
                .map(|s| if kind == Kind::FloatList { canon_float(s) } else { canon_int(s) })
                .collect();
            Ok(canon?.join(","))
        }
    }
}
