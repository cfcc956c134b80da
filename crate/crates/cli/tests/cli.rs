use std::path::Path;
use std::process::{Command, Output};

fn maxrep(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_maxrep"));
    cmd.args(args).env_remove("MAXREP_CACHE");
    if let Some(c) = cache {
        cmd.env("MAXREP_CACHE", c);
    }
    cmd.output().expect("binary runs")
}

#[test]
fn maxdim_table_has_one_row_per_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    let run = maxrep(&["maxdim", "--n-max", "10", "--out", out.to_str().unwrap()], None);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0].starts_with("N,log_d"));
    // d_10 = 768
    let row10: Vec<&str> = lines[10].split(',').collect();
    assert_eq!(row10[0], "10");
    let log_d: f64 = row10[1].parse().unwrap();
    assert!((log_d - 768f64.ln()).abs() < 1e-10);
}

#[test]
fn mckay_check_reports_on_stderr() {
    let run = maxrep(&["maxdim", "--n-max", "12", "--check-mckay", "12"], None);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&run.stderr).contains("holds=true"));
}

#[test]
fn verify_vk_exhaustive_passes() {
    let run = maxrep(&["verify-vk", "--n", "8", "--exhaustive", "--tol", "1e-9"], None);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    // header plus p(8) = 22 rows
    assert_eq!(String::from_utf8_lossy(&run.stdout).lines().count(), 23);
}

#[test]
fn verify_vk_samples_are_reproducible() {
    let a = maxrep(&["verify-vk", "--n", "30", "--samples", "5", "--seed", "7"], None);
    let b = maxrep(&["verify-vk", "--n", "30", "--samples", "5", "--seed", "7"], None);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bad_input_exits_one() {
    assert_eq!(maxrep(&["sigma", "--n", "0", "--rho", "0.5"], None).status.code(), Some(1));
    assert_eq!(maxrep(&["sigma", "--n", "4", "--rho", "1.5"], None).status.code(), Some(1));
    assert_eq!(maxrep(&["decompose", "--partition", "3,5", "--window", "4"], None).status.code(), Some(1));
    assert_eq!(maxrep(&["sigma", "--n", "4"], None).status.code(), Some(1));
    assert_eq!(maxrep(&["verify-vk", "--n", "5"], None).status.code(), Some(1));
}

#[test]
fn heuristic_needs_a_seed() {
    let run = maxrep(&["sigma", "--n", "10", "--rho", "0.3", "--heuristic"], None);
    assert_eq!(run.status.code(), Some(1));
}

#[test]
fn resource_limits_exit_two() {
    assert_eq!(maxrep(&["maxdim", "--n-max", "500"], None).status.code(), Some(2));
    assert_eq!(maxrep(&["sigma", "--n", "500", "--rho", "0.2", "--exact"], None).status.code(), Some(2));
}

#[test]
fn cache_env_overrides_flag_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let env_cache = dir.path().join("env.ndjson");
    let flag_cache = dir.path().join("flag.ndjson");
    let run = maxrep(
        &["sigma", "--n", "12", "--rho", "-0.25", "--exact", "--cache", flag_cache.to_str().unwrap()],
        Some(&env_cache),
    );
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(!flag_cache.exists());
    let first = std::fs::read_to_string(&env_cache).unwrap();
    assert_eq!(first.lines().count(), 1);
    let record: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert_eq!(record["n"], 12);

    let json = maxrep(&["sigma", "--n", "12", "--rho", "-0.25", "--format", "json"], Some(&env_cache));
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["value"], record["value"]);
}

#[test]
fn heuristic_sigma_is_an_upper_bound() {
    let exact = maxrep(&["sigma", "--n", "16", "--rho", "0.4", "--format", "json"], None);
    let heur = maxrep(
        &["sigma", "--n", "16", "--rho", "0.4", "--heuristic", "--seed", "3", "--budget", "20000", "--format", "json"],
        None,
    );
    let e: serde_json::Value = serde_json::from_slice(&exact.stdout).unwrap();
    let h: serde_json::Value = serde_json::from_slice(&heur.stdout).unwrap();
    assert!(h["value"].as_f64().unwrap() >= e["value"].as_f64().unwrap() - 1e-9);
}

#[test]
fn decompose_prints_windows() {
    let run = maxrep(&["decompose", "--partition", "6,5,4,3,2,1", "--window", "3", "--format", "json"], None);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let value: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert!(value["windows"].as_array().is_some());
}

#[test]
fn construct_hits_the_target_area() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("parts.txt");
    let run = maxrep(
        &["construct", "--n", "400", "--window", "8", "--format", "json", "--dump-parts", dump.to_str().unwrap()],
        None,
    );
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let value: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(value["build"]["area"], 400);
    let parts: u64 = std::fs::read_to_string(&dump)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .split(',')
        .map(|p| p.parse::<u64>().unwrap())
        .sum();
    assert_eq!(parts, 400);
}
