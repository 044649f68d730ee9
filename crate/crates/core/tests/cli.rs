use std::path::Path;
use std::process::{Command, Output};

fn geolab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geolab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("GEOLAB_WORKERS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const STUB: &str = "experiment = slope_vs_n
seeds = 0, 1
train.mode = stub
sweep.n_values = 100, 1000, 10000
";

#[test]
fn run_plot_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("stub.conf"), STUB).unwrap();
    let run = geolab(&["run", "stub.conf", "--output", "out", "--workers", "2"], dir.path());
    assert_eq!(run.status.code(), Some(0), "{}", stdout(&run));
    let text = stdout(&run);
    assert!(text.contains("PASS stub_slope_recovered"));
    assert!(!text.contains("FAIL"));

    let plot = geolab(&["plot", "out", "means"], dir.path());
    assert_eq!(plot.status.code(), Some(0));
    assert!(dir.path().join("out/plots/means.dat").exists());
    assert!(dir.path().join("out/plots/means.svg").exists());

    let verify = geolab(&["verify", "out/result.json"], dir.path());
    assert_eq!(verify.status.code(), Some(0));
    assert_eq!(stdout(&verify).lines().filter(|l| l.starts_with("PASS")).count(), 5);

    let csv = dir.path().join("out/tables/runs.csv");
    let t = std::fs::read_to_string(&csv).unwrap();
    std::fs::write(&csv, t.replacen(",0,", ",9,", 1)).unwrap();
    let verify = geolab(&["verify", "out"], dir.path());
    assert_eq!(verify.status.code(), Some(1));
    assert!(stdout(&verify).contains("PROBLEM"));
}

#[test]
fn default_output_dir_is_content_addressed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("stub.conf"), STUB).unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_geolab"))
        .args(["run", "stub.conf"])
        .current_dir(dir.path())
        .env("GEOLAB_WORKERS", "1")
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0));
    let entries: Vec<_> = std::fs::read_dir(dir.path().join("results")).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let name = entries[0].as_ref().unwrap().file_name().into_string().unwrap();
    assert!(name.starts_with("slope_vs_n-") && name.len() == "slope_vs_n-".len() + 12, "{name}");
}

#[test]
fn failing_verdict_gives_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    // A stub slope of +0.5 violates the "slope must be negative" verdict.
    std::fs::write(dir.path().join("up.conf"), format!("{STUB}stub.exponent = 0.5\n")).unwrap();
    let run = geolab(&["run", "up.conf", "--output", "out"], dir.path());
    assert_eq!(run.status.code(), Some(1));
    assert!(stdout(&run).contains("FAIL slope_d10_decreasing"));
    assert_eq!(geolab(&["verify", "out"], dir.path()).status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.conf"), "experiment = slope_vs_n\ntrain.etaa = 0.1\n").unwrap();
    let run = geolab(&["run", "bad.conf"], dir.path());
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8(run.stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("train.etaa"), "{err}");

    std::fs::write(dir.path().join("unknown.conf"), "experiment = nope\n").unwrap();
    let run = geolab(&["run", "unknown.conf"], dir.path());
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8(run.stderr).unwrap().contains("slope_vs_n"));
}

#[test]
fn keys_lists_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&geolab(&["keys"], dir.path()));
    assert_eq!(out.lines().count(), 9);
    let out = stdout(&geolab(&["keys", "flat_check"], dir.path()));
    assert!(out.contains("flat.label_bound"));
}
