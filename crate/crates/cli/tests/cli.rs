use std::path::Path;
use std::process::{Command, Output};

fn heatvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatvar"))
        .args(args)
        .env_remove("HEATVAR_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn number_after(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no `{key}` in {text}"));
    line.rsplit('=').next().unwrap().trim().parse().unwrap()
}

#[test]
fn constants_at_unit_viscosity() {
    let o = heatvar(&["constants", "--theta", "1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!((number_after(&s, "limit") - 1.909859).abs() < 1e-6);
    assert!((number_after(&s, "sigma_theta^2") - 38.907335).abs() < 1e-5);
    assert!((number_after(&s, "sigma1_theta^2") - 10.666667).abs() < 1e-5);
}

#[test]
fn oracle_single_increment() {
    let o = heatvar(&["oracle", "--theta", "1", "--N", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e = number_after(&stdout(&o), "E[V_N]");
    assert!((e - 3.0 / std::f64::consts::PI).abs() < 1e-9);
}

#[test]
fn gamma_out_of_range_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "kind = \"independence\"\nn_list = [64]\n[selection]\ngamma = 1.5\n");
    let o = heatvar(&["validate-config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("selection.gamma") && err.contains("0 <= gamma <= 1"), "{err}");
}

#[test]
fn bad_inputs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(heatvar(&["constants", "--theta", "-1"]).status.code(), Some(2));
    assert_eq!(heatvar(&["validate-config", "/nonexistent.toml"]).status.code(), Some(2));
    let cfg = write(dir.path(), "syntax.toml", "kind = clt\n");
    assert_eq!(heatvar(&["validate-config", &cfg]).status.code(), Some(2));
    assert_eq!(heatvar(&["simulate", "--N", "8", "--drift", "sin"]).status.code(), Some(2));
    assert_eq!(heatvar(&["bogus"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_code_three() {
    // N above the factorization cap is rejected by the simulator itself
    let o = heatvar(&["simulate", "--N", "9000"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn overrides_take_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "kind = \"clt\"\nn_list = [1]\ntheta = 1.0\n");
    // invalid as written, repaired by --N
    let o = heatvar(&["validate-config", &cfg, "--N", "16,32", "--theta", "2.5", "--M", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("n_list = [16, 32]"), "{s}");
    assert!(s.contains("theta = 2.5"), "{s}");
    assert!(s.contains("replicates = 50"), "{s}");
}

#[test]
fn run_writes_identical_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.toml", "kind = \"estimator\"\nn_list = [16, 32, 64]\nreplicates = 100\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let o = heatvar(&["run", &cfg, "--out", a.to_str().unwrap(), "--workers", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = heatvar(&["run", &cfg, "--out", b.to_str().unwrap(), "--workers", "8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ca = std::fs::read(&a).unwrap();
    assert_eq!(ca, std::fs::read(&b).unwrap());
    assert!(String::from_utf8(ca).unwrap().starts_with("experiment,N,stat,value,stderr,seed,wall_ms\n"));
    let meta = std::fs::read_to_string(dir.path().join("a.json")).unwrap();
    assert!(meta.contains("\"replicates\": 100"), "{meta}");
}

#[test]
fn run_without_output_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", "kind = \"moments\"\nn_list = [8, 16, 32]\nreplicates = 1\n");
    let o = heatvar(&["run", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.lines().any(|l| l.starts_with("moments,0,mean_gap_slope,")), "{s}");
}

#[test]
fn simulate_writes_path_csv() {
    let o = heatvar(&["simulate", "--N", "16", "--seed", "3"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "t,value");
    assert_eq!(lines.len(), 18);
    assert_eq!(lines[1], "0.0,0.0");
    assert!(lines[17].starts_with("1.0,"));
    assert_eq!(s, stdout(&heatvar(&["simulate", "--N", "16", "--seed", "3"])));
    let o = heatvar(&["simulate", "--N", "4", "--drift", "cosine"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn help_mentions_schema_version() {
    for sub in ["run", "oracle", "simulate", "constants", "validate-config"] {
        let o = heatvar(&[sub, "--help"]);
        assert!(o.status.success());
        assert!(stdout(&o).contains("config schema version 1"), "{sub}");
    }
    assert_eq!(heatvar::experiments::SCHEMA_VERSION, 1);
}

#[test]
fn example_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let o = heatvar(&["validate-config", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
            count += 1;
        }
    }
    assert!(count >= 5);
}
