use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geolab::harness::{
    default_output_dir, emit_plot_data, run_experiment_with, verify_result, Experiment, ExperimentConfig,
    ExperimentResult, RunOptions, WORKERS_ENV,
};

#[derive(Parser)]
#[command(name = "geolab", version, about = "Run, plot and verify geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Worker threads (defaults to all cores).
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        /// Result directory (defaults to results/<experiment>-<hash>).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write plot data and an SVG for one table of a stored result.
    Plot {
        result: PathBuf,
        table: String,
        /// Output directory (defaults to <result>/plots).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-check hashes and verdicts of a stored result.
    Verify { result: PathBuf },
    /// List the config keys of an experiment, or all experiment names.
    Keys { experiment: Option<String> },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> geolab::Result<bool> {
    match cli.command {
        Command::Run { config, workers, output } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let dir = output.unwrap_or_else(|| default_output_dir(std::path::Path::new("."), &cfg));
            let opts = RunOptions { workers, output_dir: Some(dir.clone()) };
            let result = run_experiment_with(&cfg, &opts)?;
            for v in &result.verdicts {
                println!("{}", v.line());
            }
            for (name, fit) in &result.fits {
                println!("fit {name}: slope {:.4} (r2 {:.3})", fit.slope, fit.r2);
            }
            println!("wrote {} in {:.1}s", dir.display(), result.manifest.wall_time_secs);
            Ok(result.all_passed())
        }
        Command::Plot { result, table, output } => {
            let res = ExperimentResult::load(&result)?;
            let base = if result.is_dir() { result.clone() } else { result.parent().map(PathBuf::from).unwrap_or_default() };
            let dir = output.unwrap_or_else(|| base.join("plots"));
            let files = emit_plot_data(&res, &table, &dir)?;
            println!("{}\n{}", files.data.display(), files.svg.display());
            Ok(true)
        }
        Command::Verify { result } => {
            let report = verify_result(&result)?;
            for l in &report.lines {
                println!("{l}");
            }
            for p in &report.problems {
                println!("PROBLEM {p}");
            }
            Ok(report.ok())
        }
        Command::Keys { experiment } => {
            match experiment {
                None => {
                    for e in Experiment::ALL {
                        println!("{e}");
                    }
                }
                Some(name) => {
                    for k in Experiment::from_name(&name)?.schema() {
                        println!("{:<28} {:<12} {}", k.key, k.default.unwrap_or("(required)"), k.doc);
                    }
                }
            }
            Ok(true)
        }
    }
}
