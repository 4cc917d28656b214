//! End-to-end tests of the `fibrel` binary: exit codes, emitted artifacts,
//! and byte-level determinism across thread counts.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fibrel"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn critical_toml() -> &'static str {
    r#"
name = "critical"
[material]
lambda = 1.0
mu = 1.0
[fiber]
gamma = 1.0
lambda_o = 1.0
mu_o = 1.0
[grid]
nx = 9
ny = 9
nz = 5
"#
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary should spawn")
}

#[test]
fn coefficients_critical_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", critical_toml());
    let out = run(bin()
        .args(["coefficients", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/coefficients.json")).unwrap())
            .unwrap();
    assert_eq!(json["kappa"], 2.0);
    assert_eq!(json["A11"], 1.5);
    assert_eq!(json["E_o"], 2.5);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("regime: Critical"), "{stdout}");
}

#[test]
fn coefficients_soft_config_emits_zero_young() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "soft.toml",
        r#"
[material]
lambda = 1.0
mu = 1.0
[fiber]
gamma = 1.0
lambda_o = 0.0
mu_o = 0.0
"#,
    );
    let out = run(bin()
        .args(["coefficients", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/coefficients.json")).unwrap())
            .unwrap();
    assert_eq!(json["E_o"], 0.0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("regime: Soft"));
}

#[test]
fn malformed_toml_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "[material\nlambda = ");
    let out = run(bin().args(["coefficients", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_exits_2() {
    let out = run(bin().args(["solve", "--config", "/nonexistent/x.toml"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_config_fallback() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"material": {"lambda": 0.0, "mu": 1.0}, "fiber": {"gamma": 1.0}}"#,
    );
    let out = run(bin()
        .args(["coefficients", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/coefficients.json")).unwrap())
            .unwrap();
    assert_eq!(json["kappa"], 3.0);
}

#[test]
fn conjectural_gamma_zero_refused_without_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "g0.toml",
        r#"
[material]
lambda = 1.0
mu = 1.0
[fiber]
gamma = 0.0
lambda_o = 1.0
mu_o = 1.0
[grid]
nx = 5
ny = 5
nz = 3
"#,
    );
    let refused = run(bin()
        .args(["solve", "--which", "limit", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert_eq!(refused.status.code(), Some(4));

    let allowed = run(bin()
        .args(["solve", "--which", "limit", "--allow-conjectural", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert!(allowed.status.success(), "{}", String::from_utf8_lossy(&allowed.stderr));
}

#[test]
fn solve_limit_emits_report_and_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", critical_toml());
    let out = run(bin()
        .args(["solve", "--which", "limit", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/energy_report.json")).unwrap())
            .unwrap();
    assert!(report["energy_total"].as_f64().unwrap() > 0.0);
    assert!(report["residual_norm"].as_f64().unwrap() <= 1e-8);
    let fields = std::fs::read_to_string(tmp.path().join("o/fields.csv")).unwrap();
    let mut lines = fields.lines();
    assert_eq!(lines.next().unwrap(), "x,y,z,u1,u2,u3,v3");
    assert_eq!(fields.lines().count(), 1 + 9 * 9 * 5);
    assert!(fields.contains("\r\n"), "CSV must use CRLF line endings");
}

#[test]
fn stiff_solve_with_zero_young_matches_plain_elasticity() {
    let tmp = tempfile::tempdir().unwrap();
    let stiff_cfg = write(
        tmp.path(),
        "s.toml",
        r#"
[material]
lambda = 1.0
mu = 1.0
[fiber]
gamma = 1.0
lambda_o = 0.0
mu_o = 0.0
[grid]
nx = 9
ny = 9
nz = 5
"#,
    );
    let stiff = run(bin()
        .args(["solve", "--which", "stiff", "--config"])
        .arg(&stiff_cfg)
        .arg("--out")
        .arg(tmp.path().join("a")));
    assert!(stiff.status.success());
    // the limit solve of the same config has gamma > 0 but E_o = 0 and the
    // coupling only acts when v3 deviates; energies agree to solver tolerance
    let limit = run(bin()
        .args(["solve", "--which", "limit", "--config"])
        .arg(&stiff_cfg)
        .arg("--out")
        .arg(tmp.path().join("b")));
    assert!(limit.status.success());
    let e = |d: &str| -> f64 {
        let text =
            std::fs::read_to_string(tmp.path().join(d).join("energy_report.json")).unwrap();
        serde_json::from_str::<serde_json::Value>(&text).unwrap()["energy_total"]
            .as_f64()
            .unwrap()
    };
    let (es, el) = (e("a"), e("b"));
    assert!((es - el).abs() <= 1e-6 * es.max(1.0), "stiff {es} vs limit {el}");
}

#[test]
fn fine_solve_under_resolved_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        r#"
[material]
lambda = 1.0
mu = 1.0
[fiber]
gamma = 2.0
lambda_o = 1.0
mu_o = 1.0
[grid]
nx = 9
ny = 9
nz = 3
[sweep]
epsilons = [0.25]
"#,
    );
    let out = run(bin()
        .args(["solve", "--which", "fine", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("under-resolved"));
}

#[test]
fn compare_single_epsilon_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        r#"
[material]
lambda = 1.0
mu = 1.0
[sweep]
epsilons = [0.5]
"#,
    );
    let out = run(bin().args(["compare", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cell_verify_single_radius_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        r#"
[material]
lambda = 1.0
mu = 1.0
[cell_verify]
radii = [100.0]
"#,
    );
    let out = run(bin().args(["cell-verify", "--config"]).arg(&cfg));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cell_verify_emits_fitted_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        r#"
[material]
lambda = 1.0
mu = 1.0
[cell_verify]
radii = [100.0, 10000.0]
n_r = 24
n_theta = 16
"#,
    );
    let out = run(bin()
        .args(["cell-verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("o/cell_verify.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "m,l,R,value,fitted_limit,exact_limit,rel_error"
    );
    // 9 (m, l) pairs x 2 radii
    assert_eq!(csv.lines().count(), 1 + 18);
}

#[test]
fn regimes_soft_classification() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "soft.toml",
        r#"
[material]
lambda = 1.0
mu = 1.0
[fiber]
gamma = 1.0
lambda_o = 0.0
mu_o = 0.0
"#,
    );
    let out = run(bin()
        .args(["regimes", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/regimes.json")).unwrap())
            .unwrap();
    assert_eq!(json["tag"], "Soft");
}

#[test]
fn compare_outputs_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        r#"
[material]
lambda = 1.0
mu = 1.0
[fiber]
gamma = 2.0
lambda_o = 1.0
mu_o = 1.0
[grid]
nx = 17
ny = 17
nz = 5
[sweep]
epsilons = [0.5, 0.45]
[recovery]
u = ["0", "0", "0.2*x3"]
v = ["0", "0", "0.3*x3"]
"#,
    );
    for (dir, threads) in [("t1", "1"), ("t4", "4")] {
        let out = run(bin()
            .args(["compare", "--threads", threads, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(dir)));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["convergence.csv", "summary.json"] {
        let a = std::fs::read(tmp.path().join("t1").join(file)).unwrap();
        let b = std::fs::read(tmp.path().join("t4").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs across thread counts");
    }
}
