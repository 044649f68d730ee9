use geolab::harness::{
    emit_plot_data, run_experiment, run_experiment_with, verify_result, Experiment, ExperimentConfig, ExperimentResult,
    RunOptions,
};
use geolab::Error;

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

const STUB: &str = "
experiment = slope_vs_n
seeds = 0, 1
train.mode = stub
stub.exponent = -0.7
stub.coef = 3
sweep.d_values = 10, 50
sweep.n_values = 100, 200, 400, 800
";

const SMALL_FLAT: &str = "
experiment = flat_check
seeds = 3, 4, 5
dist.d = 5
sweep.n_values = 30, 40
";

#[test]
fn stub_power_law_slope_is_recovered_exactly() {
    let r = run_experiment(&cfg(STUB)).unwrap();
    for key in ["slope_d10", "slope_d50"] {
        let fit = r.fits[key];
        assert!((fit.slope + 0.7).abs() < 1e-12, "{key}: {}", fit.slope);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-9);
    }
    assert!(r.all_passed(), "{:#?}", r.verdicts);
    assert_eq!(r.table("means").unwrap().len(), 8);
    assert_eq!(r.table("runs").unwrap().len(), 16);
}

#[test]
fn every_verdict_names_a_criterion_and_a_real_row_range() {
    for text in [STUB, SMALL_FLAT] {
        let r = run_experiment(&cfg(text)).unwrap();
        assert!(!r.verdicts.is_empty());
        for v in &r.verdicts {
            assert!(v.criterion.is_some(), "{} has no criterion", v.name);
            let t = r.table(&v.table).unwrap();
            assert!(v.rows.0 <= v.rows.1 && v.rows.1 <= t.len(), "{}", v.name);
        }
    }
}

#[test]
fn identical_configs_give_identical_bytes_for_any_worker_count() {
    let c = cfg(SMALL_FLAT);
    let a = run_experiment_with(&c, &RunOptions { workers: Some(1), output_dir: None }).unwrap();
    let b = run_experiment_with(&c, &RunOptions { workers: Some(3), output_dir: None }).unwrap();
    assert_eq!(a.manifest.hash, b.manifest.hash);
    assert_eq!(a.manifest.table_hashes, b.manifest.table_hashes);
    for (ta, tb) in a.tables.iter().zip(&b.tables) {
        assert_eq!(ta.to_csv(), tb.to_csv());
    }
    assert!(a.all_passed());
}

#[test]
fn manifest_hash_depends_on_canonical_config_only() {
    let a = cfg("experiment = flat_check\nsweep.n_values = 30\ndist.d = 5\n");
    let b = cfg("# same run, different spelling\nexperiment = flat_check\nflat.label_bound = 1.0e0\ndist.d = 5\nsweep.n_values = 30\n");
    let c = cfg("experiment = flat_check\nsweep.n_values = 31\ndist.d = 5\n");
    let h = |c: &ExperimentConfig| geolab::harness::config_hash(&c.canonical_text());
    assert_eq!(h(&a), h(&b));
    assert_ne!(h(&a), h(&c));
}

#[test]
fn unknown_experiment_lists_the_registry() {
    let err = ExperimentConfig::parse("experiment = fig7\n").unwrap_err();
    match err {
        Error::Registry { name, known } => {
            assert_eq!(name, "fig7");
            for e in Experiment::ALL {
                assert!(known.contains(e.name()));
            }
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn divergence_keeps_partial_results_and_fails() {
    let c = cfg("
experiment = slope_vs_n
dist.d = 3
dist.components = 2
net.width = 16
train.eta = 1000
train.clip_norm = none
train.epochs = 200
train.eval_every = 1
sweep.d_values = 3
sweep.n_values = 20, 40, 80
");
    let r = run_experiment(&c).unwrap();
    let v = r.verdicts.iter().find(|v| v.name == "no_divergence").unwrap();
    assert!(!v.passed);
    assert!(!r.all_passed());
    let runs = r.table("runs").unwrap();
    let col = runs.column_index("diverged").unwrap();
    assert!(runs.rows.iter().all(|row| row[col] == "true"));
}

#[test]
fn save_verify_and_detect_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let r = run_experiment_with(&cfg(STUB), &RunOptions { workers: None, output_dir: Some(out.clone()) }).unwrap();
    assert_eq!(ExperimentResult::load(&out).unwrap(), r);
    let report = verify_result(&out).unwrap();
    assert!(report.ok(), "{:?}", report.problems);
    assert_eq!(report.lines.len(), r.verdicts.len());

    // An edited table on disk is caught.
    let csv = out.join("tables").join("means.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    std::fs::write(&csv, text.replacen("3", "4", 1)).unwrap();
    assert!(!verify_result(&out).unwrap().ok());
    std::fs::write(&csv, text).unwrap();

    // So is a verdict whose stored outcome disagrees with its value.
    let json = out.join("result.json");
    let mut stored: ExperimentResult = ExperimentResult::load(&out).unwrap();
    stored.verdicts[0].value = f64::NAN;
    std::fs::write(&json, serde_json::to_string(&stored).unwrap()).unwrap();
    let report = verify_result(&out).unwrap();
    assert!(!report.problems.is_empty());
    assert!(!report.all_passed);
}

#[test]
fn plot_emission_is_byte_identical_and_grouped() {
    let r = run_experiment(&cfg(STUB)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = emit_plot_data(&r, "means", &dir.path().join("a")).unwrap();
    let b = emit_plot_data(&r, "means", &dir.path().join("b")).unwrap();
    let dat = std::fs::read_to_string(&a.data).unwrap();
    assert_eq!(dat, std::fs::read_to_string(&b.data).unwrap());
    assert_eq!(std::fs::read(&a.svg).unwrap(), std::fs::read(&b.svg).unwrap());
    // One block per d value.
    assert!(dat.contains("# d = 10") && dat.contains("# d = 50"));
    assert_eq!(dat.split("\n\n\n").count(), 2);
    assert!(std::fs::read_to_string(&a.svg).unwrap().starts_with("<svg"));
}

#[test]
fn plot_errors_on_missing_or_empty_tables() {
    let mut r = run_experiment(&cfg(STUB)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(emit_plot_data(&r, "nope", dir.path()), Err(Error::MissingTable(_))));
    r.tables[0].rows.clear();
    let name = r.tables[0].name.clone();
    let out = dir.path().join("empty");
    assert!(matches!(emit_plot_data(&r, &name, &out), Err(Error::EmptyTable(_))));
    assert!(!out.join(format!("{name}.dat")).exists());
}
