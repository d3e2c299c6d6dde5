use std::path::PathBuf;
use std::process::{Command, Output};

fn verify(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_verify"));
    cmd.args(args).env_remove("ETL_TRUNC");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("etl-cli-{}-{name}", std::process::id()))
}

#[test]
fn single_suite_passes_with_json_on_stdout() {
    let out = verify(&["qfay", "--n", "3"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["reports"][0]["params"]["n"], 3);
    assert_eq!(v["summary"]["pass"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));
}

#[test]
fn unknown_suite_and_bad_values_exit_two() {
    assert_eq!(verify(&["nope"], &[]).status.code(), Some(2));
    assert_eq!(verify(&["theta", "--tau_im", "-1"], &[]).status.code(), Some(2));
    assert_eq!(verify(&["theta"], &[("ETL_TRUNC", "many")]).status.code(), Some(2));
}

#[test]
fn flags_override_environment_override_file() {
    let cfg = scratch("cfg.toml");
    std::fs::write(&cfg, "trunc = 20\nseed = 5\ntau_im = 0.9\n").unwrap();
    let path = cfg.to_str().unwrap();

    let v = json(&verify(&["theta", "--config", path], &[]));
    assert_eq!(v["reports"][0]["params"]["trunc"], 20);
    assert_eq!(v["reports"][0]["params"]["seed"], 5);

    let v = json(&verify(&["theta", "--config", path], &[("ETL_TRUNC", "22")]));
    assert_eq!(v["reports"][0]["params"]["trunc"], 22);

    let v = json(&verify(&["theta", "--config", path, "--trunc", "26", "--seed", "9"], &[("ETL_TRUNC", "22")]));
    assert_eq!(v["reports"][0]["params"]["trunc"], 26);
    assert_eq!(v["reports"][0]["params"]["seed"], 9);
    assert_eq!(v["reports"][0]["params"]["tau"]["im"].as_f64(), Some(0.9));
    std::fs::remove_file(cfg).ok();
}

#[test]
fn json_file_output() {
    let path = scratch("report.json");
    let out = verify(&["rll", "--json", path.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["reports"][0]["suite"], "rll");
    std::fs::remove_file(path).ok();
}

#[test]
fn unknown_config_key_is_rejected() {
    let cfg = scratch("bad.toml");
    std::fs::write(&cfg, "rank = 3\n").unwrap();
    assert_eq!(verify(&["theta", "--config", cfg.to_str().unwrap()], &[]).status.code(), Some(2));
    std::fs::remove_file(cfg).ok();
}
