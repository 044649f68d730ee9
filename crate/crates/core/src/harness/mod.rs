//! Experiment harness: config parsing, recipes, result persistence and plots.
//!
//! A run is a pure function of its canonical config (plus the code version),
//! so two runs of one config produce byte-identical tables whatever the
//! worker count.

mod config;
mod plot;
mod recipes;
mod result;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Experiment, ExperimentConfig, KeySpec, Kind};
pub use plot::{emit_plot_data, PlotFiles};
pub use result::{
    config_hash, result_file, sha256_hex, verify_result, Cell, Check, ExperimentResult, Manifest, PlotSpec, Table,
    Verdict, VerifyReport, CODE_VERSION,
};

use crate::Result;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "GEOLAB_WORKERS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Where to save the result; nothing is written when `None`.
    pub output_dir: Option<PathBuf>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, &RunOptions::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResult> {
    let start = Instant::now();
    let out = in_pool(opts.workers, || recipes::run(cfg))??;
    let canonical = cfg.canonical_text();
    let table_hashes = out
        .tables
        .iter()
        .map(|t| (t.name.clone(), sha256_hex(t.to_csv().as_bytes())))
        .collect();
    let result = ExperimentResult {
        manifest: Manifest {
            experiment: cfg.experiment().name().to_string(),
            config: cfg.values().clone(),
            code_version: CODE_VERSION.to_string(),
            hash: config_hash(&canonical),
            wall_time_secs: start.elapsed().as_secs_f64(),
            table_hashes,
        },
        tables: out.tables,
        fits: out.fits,
        verdicts: out.verdicts,
    };
    if let Some(dir) = &opts.output_dir {
        result.save(dir)?;
    }
    Ok(result)
}

/// `results/<experiment>-<first 12 hash digits>` under `root`.
pub fn default_output_dir(root: &Path, cfg: &ExperimentConfig) -> PathBuf {
    let hash = config_hash(&cfg.canonical_text());
    root.join("results").join(format!("{}-{}", cfg.experiment().name(), &hash[..12]))
}

#[cfg(feature = "parallel")]
fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| crate::Error::Precondition(format!("cannot build a pool of {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn in_pool<T>(_workers: Option<usize>, f: impl FnOnce() -> T) -> Result<T> {
    Ok(f())
}
