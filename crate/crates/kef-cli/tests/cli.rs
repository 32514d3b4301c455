//! End-to-end tests of the `kef` binary: artifacts, determinism, exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn kef() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kef"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("kef-cli-test-{tag}-{}", std::process::id()));
    fs::create_dir_all(&d).unwrap();
    d
}

fn write_config(dir: &PathBuf, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

const TRIVIAL_CFG: &str = r#"{
  "xi": {"sigma2": 0.0, "gamma": {"drift0": 1.0}, "nu": []},
  "eta": {"sigma2": 0.0, "gamma": {"drift0": 1.0}, "nu": []},
  "q": 1.0,
  "sim": {"step": 0.001, "eps": 0.0001, "horizon": "killed",
          "small_jump_mode": "drop_compensate", "master_seed": 7},
  "n": 10
}"#;

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn simulate_trivial_support_and_determinism() {
    let dir = tmpdir("sim");
    let cfg = write_config(&dir, "trivial.json", TRIVIAL_CFG);
    let out1 = dir.join("a.csv");
    let out2 = dir.join("b.csv");

    let o = run(kef().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out1));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out1).unwrap();
    let rows: Vec<&str> = text.trim().lines().collect();
    assert_eq!(rows[0], "v");
    assert_eq!(rows.len(), 11); // header + 10 draws
    for r in &rows[1..] {
        let v: f64 = r.parse().unwrap();
        // support of (1/γ)(1 - e^{-γτ}) with γ = 1
        assert!((0.0..=1.0).contains(&v), "draw {v} outside [0, 1]");
    }

    // byte-identical rerun under the same seed
    let o = run(kef().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out2));
    assert!(o.status.success());
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());

    // sidecar metadata exists and mentions the seed
    let meta = fs::read_to_string(dir.join("a.meta.json")).unwrap();
    assert!(meta.contains("\"seed\": 7"));
}

#[test]
fn simulate_q0_without_fixed_horizon_is_config_error() {
    let dir = tmpdir("q0");
    let cfg = write_config(
        &dir,
        "q0.json",
        &TRIVIAL_CFG.replace("\"q\": 1.0", "\"q\": 0.0"),
    );
    let o = run(kef()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("x.csv")));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("fixed_t"), "stderr: {err}");
}

#[test]
fn check_cf_trivial_passes() {
    let dir = tmpdir("cf");
    let cfg = write_config(&dir, "trivial.json", TRIVIAL_CFG);
    let report = dir.join("report.json");
    let o = run(kef()
        .args(["check", "--config"])
        .arg(&cfg)
        .args([
            "--equation",
            "cf",
            "--reference",
            "trivial_kef",
            "--params",
            r#"{"gamma": 1.0, "q": 1.0}"#,
            "--tol",
            "1e-9",
        ])
        .arg("--out")
        .arg(&report));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS"), "{stdout}");
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["equation"], "cf");
    assert_eq!(rep["pass"], true);
    assert!(rep["norm_sup"].as_f64().unwrap() < 1e-9);
}

#[test]
fn check_mu_fv_laplace_passes() {
    let dir = tmpdir("mufv");
    let cfg = write_config(
        &dir,
        "laplace.json",
        r#"{
  "xi": {"sigma2": 0.0, "gamma": {"drift0": 1.0}, "nu": []},
  "eta": {"sigma2": 0.0, "gamma": {"drift0": 0.0},
          "nu": [{"kind": "two_sided_exp", "rate": 1.0, "scale_pos": 1.0, "scale_neg": 1.0}]},
  "q": 0.0,
  "sim": {"step": 0.001, "eps": 0.0001, "horizon": {"fixed_t": 30.0},
          "small_jump_mode": "drop_compensate", "master_seed": 1},
  "n": 10
}"#,
    );
    let o = run(kef()
        .args(["check", "--config"])
        .arg(&cfg)
        .args([
            "--equation",
            "mu-fv",
            "--reference",
            "laplace01",
            "--tol",
            "1e-9",
        ]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
}

#[test]
fn check_density_diff_potential_passes_and_wrong_law_fails() {
    let dir = tmpdir("dd");
    let cfg = write_config(
        &dir,
        "potential.json",
        r#"{
  "xi": {"sigma2": 0.0, "gamma": 0.0, "nu": []},
  "eta": {"sigma2": 1.0, "gamma": 0.0, "nu": []},
  "q": 2.0,
  "sim": {"step": 0.001, "eps": 0.0001, "horizon": "killed",
          "small_jump_mode": "drop_compensate", "master_seed": 1},
  "n": 10
}"#,
    );
    let o = run(kef()
        .args(["check", "--config"])
        .arg(&cfg)
        .args([
            "--equation",
            "density-diff",
            "--reference",
            "potential_bm",
            "--params",
            r#"{"q": 2.0}"#,
            "--tol",
            "1e-9",
        ]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    // wrong killing rate in the law: residual is visible, exit code 4
    let o = run(kef()
        .args(["check", "--config"])
        .arg(&cfg)
        .args([
            "--equation",
            "density-diff",
            "--reference",
            "potential_bm",
            "--params",
            r#"{"q": 1.0}"#,
            "--tol",
            "1e-9",
        ]));
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn check_on_simulated_samples() {
    let dir = tmpdir("emp");
    let cfg = write_config(
        &dir,
        "trivial.json",
        &TRIVIAL_CFG.replace("\"n\": 10", "\"n\": 20000"),
    );
    let samples = dir.join("v.csv");
    let o = run(kef().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&samples));
    assert!(o.status.success());
    // empirical CF residual with a tolerance matching the Monte Carlo budget
    let o = run(kef()
        .args(["check", "--config"])
        .arg(&cfg)
        .args(["--equation", "cf", "--grid", "0.5:4:6|log", "--tol", "1e-3"])
        .arg("--samples")
        .arg(&samples));
    assert!(
        o.status.success(),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn gof_trivial_and_unknown_reference() {
    let dir = tmpdir("gof");
    let cfg = write_config(
        &dir,
        "trivial.json",
        &TRIVIAL_CFG.replace("\"n\": 10", "\"n\": 20000"),
    );
    let verdict = dir.join("gof.json");
    let o = run(kef()
        .args(["gof", "--config"])
        .arg(&cfg)
        .args([
            "--reference",
            "trivial_kef",
            "--params",
            r#"{"gamma": 1.0, "q": 1.0}"#,
        ])
        .arg("--out")
        .arg(&verdict));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&verdict).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["ks"].as_f64().unwrap() < v["threshold"].as_f64().unwrap());

    let o = run(kef()
        .args(["gof", "--config"])
        .arg(&cfg)
        .args(["--reference", "no_such_law"]));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reference_tabulation() {
    let o = run(kef().args([
        "reference",
        "--name",
        "laplace01",
        "--grid",
        "0.1:2:4",
    ]));
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("z,value,series"));
    assert!(text.contains(",pdf") && text.contains(",cdf") && text.contains(",cf_re"));
}

#[test]
fn malformed_config_is_exit_2() {
    let dir = tmpdir("bad");
    let cfg = write_config(&dir, "bad.json", "{ not json");
    let o = run(kef()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("x.csv")));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn assume_convergence_flag_overrides_q0_gate() {
    // decreasing ξ fails the sufficient convergence check unless asserted
    let dir = tmpdir("conv");
    let cfg = write_config(
        &dir,
        "dec.json",
        r#"{
  "xi": {"sigma2": 0.0, "gamma": {"drift0": -0.2}, "nu": []},
  "eta": {"sigma2": 0.0, "gamma": {"drift0": 1.0}, "nu": []},
  "q": 0.0,
  "sim": {"step": 0.001, "eps": 0.0001, "horizon": {"fixed_t": 2.0},
          "small_jump_mode": "drop_compensate", "master_seed": 3},
  "n": 5
}"#,
    );
    let out = dir.join("v.csv");
    let o = run(kef().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(2));
    let o = run(kef()
        .args(["simulate", "--assume-convergence", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_ml_subordinator_config() {
    // infinite-activity ξ through the JSON schema, with the eps machinery
    let dir = tmpdir("ml");
    let cfg = write_config(
        &dir,
        "ml.json",
        r#"{
  "xi": {"sigma2": 0.0, "gamma": {"drift0": 0.0},
         "nu": [{"kind": "ml_subordinator", "alpha": 0.5}]},
  "eta": {"sigma2": 0.0, "gamma": {"drift0": 1.0}, "nu": []},
  "q": 0.5641895835477563,
  "sim": {"step": 0.001, "eps": 0.0001, "horizon": "killed",
          "small_jump_mode": "drop_compensate", "master_seed": 9},
  "n": 200
}"#,
    );
    let out = dir.join("v.csv");
    let o = run(kef().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = fs::read_to_string(dir.join("v.meta.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&meta).unwrap();
    // dropped-jump drift of the subordinator is recorded
    assert!(v["bias_note"]["xi_eps_drift"].as_f64().unwrap() > 0.0);
}

#[test]
fn check_generator_equation() {
    let dir = tmpdir("gen");
    let cfg = write_config(&dir, "trivial.json", TRIVIAL_CFG);
    let o = run(kef()
        .args(["check", "--config"])
        .arg(&cfg)
        .args([
            "--equation",
            "generator",
            "--reference",
            "trivial_kef",
            "--params",
            r#"{"gamma": 1.0, "q": 1.0}"#,
            "--tol",
            "1e-8",
        ]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
}
