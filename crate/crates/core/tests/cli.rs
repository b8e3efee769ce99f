use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SAME_MODELS: &str = r#"
mode = "gaussian"
n = 500
d_max = 4

[p]
k = 50
x = ["1/2", "1/2"]
lambda = "1/4"

[q]
k = 50
x = ["1/2", "1/2"]
lambda = "1/4"
"#;

const SIMULATE: &str = r#"
mode = "binary"
n = 40
reps = 60
seed = 7

[p]
k = 20
x = [1]
q = "1/5"
s = "1/10"
tau1 = "1/2"

[q]
k = 20
x = ["1/2", "1/2"]
q = "1/5"
s = "1/10"
tau1 = "1/2"
"#;

const SWEEP: &str = r#"
mode = "gaussian"
n = 1000000
d_max = 4

[p]
k = 3982
x = [1]
lambda = "1/10000"

[q]
k = 3982
x = ["1/2", "1/2"]
lambda = "1/10000"

[sweep]
lambda = ["1/100000", "1/30000", "1/10000", "1/3000", "1/1000"]
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_lowdeg"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

#[test]
fn identical_models_have_unit_bound() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), SAME_MODELS, &["advantage"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(dir.path(), "advantage.json");
    assert_eq!(report["total_bound"].as_f64(), Some(1.0));
    assert_eq!(report["total_bound_sq"].as_str(), Some("1"));
    assert!(report["fingerprint"].as_str().is_some_and(|f| f.len() == 16));
}

#[test]
fn missing_field_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let broken = SAME_MODELS.replacen("x = [\"1/2\", \"1/2\"]\n", "", 1);
    let out = run(dir.path(), &broken, &["advantage"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`p`") && err.contains("missing field `x`"), "{err}");
}

#[test]
fn unknown_field_and_bad_params_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &SAME_MODELS.replace("d_max = 4", "d_max = 4\ndmax = 3"), &["advantage"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dmax"));

    let out = run(dir.path(), &SAME_MODELS.replacen("\"1/2\", \"1/2\"", "\"1/2\", \"1/3\"", 1), &["advantage"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sum of x must equal 1"));
}

#[test]
fn simulation_is_independent_of_thread_count() {
    let one = TempDir::new().unwrap();
    let many = TempDir::new().unwrap();
    assert!(run(one.path(), SIMULATE, &["simulate", "--threads", "1"]).status.success());
    assert!(run(many.path(), SIMULATE, &["simulate", "--threads", "4"]).status.success());
    let a = fs::read(one.path().join("out/simulate.csv")).unwrap();
    let b = fs::read(many.path().join("out/simulate.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(json(one.path(), "simulate.json")["error_rate"], json(many.path(), "simulate.json")["error_rate"]);

    let other = TempDir::new().unwrap();
    assert!(run(other.path(), SIMULATE, &["simulate", "--seed", "8"]).status.success());
    assert_ne!(a, fs::read(other.path().join("out/simulate.csv")).unwrap());
}

#[test]
fn sweep_bound_grows_with_signal_and_resumes() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), SWEEP, &["sweep"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(table.as_bytes());
    let bounds: Vec<f64> = rdr
        .deserialize::<std::collections::HashMap<String, String>>()
        .map(|r| r.unwrap()["total_bound"].parse().unwrap())
        .collect();
    assert_eq!(bounds.len(), 5);
    assert!(bounds.windows(2).all(|w| w[0] <= w[1]), "{bounds:?}");
    assert!(bounds[0] >= 1.0);

    let again = run(dir.path(), SWEEP, &["sweep"]);
    assert!(again.status.success());
    assert!(String::from_utf8_lossy(&again.stdout).contains("up to date"));
    assert_eq!(fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap(), table);

    // a different grid invalidates the stored table
    let changed = SWEEP.replace("\"1/1000\"]", "\"1/1000\", \"1/500\"]");
    let third = run(dir.path(), &changed, &["sweep"]);
    assert!(String::from_utf8_lossy(&third.stdout).contains("sweep finished"));
}

#[test]
fn enumerate_writes_catalog() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), SAME_MODELS.replace("d_max = 4", "d_max = 3").as_str(), &["enumerate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/catalog.txt")).unwrap();
    let catalog = lowdeg::graphs::ClassCatalog::from_text(&text).unwrap();
    assert!(catalog.iter().all(|g| g.all_components_cyclic() && g.d() <= 3));
    assert_eq!(json(dir.path(), "enumerate.json")["total"].as_u64(), Some(catalog.len() as u64));
}
