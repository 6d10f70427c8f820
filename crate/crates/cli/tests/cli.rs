use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rvfl_core::{ExperimentResults, TrainedModel};

const MINI: &str = r#"
target = "NLF"
n = 2
n_train = 80
n_test = 60
trials = 2
configurations = ["+dl+b", "-dl-b"]
strategies = ["Gs", "Galpha"]

[grids]
m_values = [1, 4]
u_values = [2]
alpha_min_values = [30]
alpha_step = 30
"#;

fn rvfl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvfl")).args(args).output().expect("spawn rvfl")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("mini.toml");
    fs::write(&path, MINI).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let out = rvfl(&["run", "--config", &cfg, "--seed", "7", "--out", a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = rvfl(&["run", "--config", &cfg, "--seed", "7", "--threads", "3", "--out", b.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let res = ExperimentResults::load(&a).unwrap();
    assert_eq!(res.config.master_seed, 7);
    assert_eq!(res.trials.len(), 2 * 2 * 2);
}

#[test]
fn table_rerenders_stored_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let json = dir.path().join("r.json");
    assert!(rvfl(&["run", "--config", &cfg, "--trials", "1", "--out", json.to_str().unwrap()]).status.success());

    let md = rvfl(&["table", "--format", "markdown", json.to_str().unwrap()]);
    assert!(md.status.success());
    let text = String::from_utf8(md.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("| G")).count(), 4);

    let csv = rvfl(&["table", "--format", "csv", json.to_str().unwrap()]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 5);

    let again = dir.path().join("again.json");
    let out = rvfl(&["table", "--format", "json", "--out", again.to_str().unwrap(), json.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read(&json).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn run_can_print_csv_directly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = rvfl(&["run", "--config", &cfg, "--trials", "1", "--format", "csv"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("strategy,configuration,"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(rvfl(&["run"]).status.code(), Some(1));
    assert_eq!(rvfl(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rvfl(&["run", "--config", "x.toml", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(rvfl(&["train", "--u", "-1"]).status.code(), Some(1));
    assert_eq!(rvfl(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "target = \"NL\"\nn = 2\nnoise = 0.1\n").unwrap();
    let out = rvfl(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3") && msg.contains("noise"), "{msg}");
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{ not json").unwrap();
    assert_eq!(rvfl(&["table", broken.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(rvfl(&["table", "/nonexistent/results.json"]).status.code(), Some(2));
}

#[test]
fn train_reports_errors_and_saves_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let data = dir.path().join("train.csv");
    let out = rvfl(&[
        "train", "--target", "NL", "--n", "2", "--m", "15", "--variant", "-dl+b", "--strategy", "Galpha",
        "--alpha-min", "15", "--alpha-max", "75", "--n-train", "300", "--n-test", "500",
        "--out", model.to_str().unwrap(), "--dump-data", data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    for key in ["train_rmse:", "test_rmse:", "linear_component_rms: 0", "nonlinear_component_rms:", "bias_component_rms:"] {
        assert!(stdout.contains(key), "missing {key} in\n{stdout}");
    }
    let (loaded, seed) = TrainedModel::from_json(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(seed, Some(42));
    assert_eq!(loaded.topology.hidden, 15);

    let out = rvfl(&["train", "--data", data.to_str().unwrap(), "--m", "5"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("train_rmse:"));
}

#[test]
fn selftest_passes() {
    let out = rvfl(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}
