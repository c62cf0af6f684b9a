//! End-to-end checks of the command-line interface: exit codes, output
//! schemas, and byte-level determinism across thread counts.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_minksurf")
}

fn workspace_config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn write_temp_config(name: &str, body: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("minksurf-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

#[test]
fn curvatures_csv_schema_and_determinism() {
    let config = workspace_config("quartic_sphere.toml");
    let config = config.to_str().unwrap();

    let single = run(&["curvatures", "--config", config], Some("1"));
    assert!(
        single.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&single.stderr)
    );
    let body = String::from_utf8(single.stdout).unwrap();
    assert!(body.starts_with(
        "u,v,p_x,p_y,p_z,xi_x,xi_y,xi_z,eta_x,eta_y,eta_z,lambda1,lambda2,K,H_mean,K_e,umbilic,tau_residual,rank_h,error\n"
    ));
    assert_eq!(body.lines().count(), 1 + 20 * 20);

    // identical bytes with a different worker count
    let multi = run(&["curvatures", "--config", config], Some("8"));
    assert_eq!(body, String::from_utf8(multi.stdout).unwrap());

    // every row of the sphere sweep is umbilic with K near 1/4
    for line in body.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let k: f64 = fields[13].parse().unwrap();
        assert!((k - 0.25).abs() <= 1e-4);
        assert_eq!(fields[16], "true");
    }
}

#[test]
fn json_output_mirrors_field_names() {
    let config = workspace_config("quartic_sphere.toml");
    let out = run(
        &[
            "curvatures",
            "--config",
            config.to_str().unwrap(),
            "--format",
            "json",
        ],
        Some("2"),
    );
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = parsed.as_array().unwrap();
    assert_eq!(rows.len(), 400);
    let row = &rows[0];
    for key in [
        "u",
        "v",
        "p",
        "xi",
        "eta",
        "lambda1",
        "lambda2",
        "K",
        "H_mean",
        "K_e",
        "umbilic",
        "tau_residual",
        "rank_h",
        "error",
    ] {
        assert!(row.get(key).is_some(), "missing key {key}");
    }
}

#[test]
fn check_command_exit_codes() {
    // passing suite
    let ok = run(
        &[
            "check",
            "--config",
            workspace_config("ellipsoid_norm_check.toml")
                .to_str()
                .unwrap(),
        ],
        Some("2"),
    );
    assert_eq!(
        ok.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let report = String::from_utf8(ok.stdout).unwrap();
    assert!(report.starts_with("name,witnesses,worst,threshold,pass\n"));
    assert!(report.lines().skip(1).all(|l| l.ends_with("true")));

    // forced umbilic misclassification fails with exit 1
    let failing = write_temp_config(
        "umbilic-zero.toml",
        r#"
        [norm]
        family = "quartic"
        eps = 0.1

        [surface]
        family = "minkowski_sphere"
        radius = 2.0
        grid = [5, 5]

        [options]
        umbilic_tol = 0.0
        oracle_samples = 2
        "#,
    );
    let out = run(&["check", "--config", failing.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(
        report
            .lines()
            .any(|l| l.starts_with("umbilic_classification") && l.ends_with("false")),
        "umbilic check should be the failure:\n{report}"
    );
}

#[test]
fn config_errors_exit_2() {
    let bad = write_temp_config(
        "bad-eps.toml",
        r#"
        [norm]
        family = "quartic"
        eps = -0.5

        [surface]
        family = "torus"
        major = 2.0
        minor = 0.5
        "#,
    );
    let out = run(&["curvatures", "--config", bad.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps"));

    let missing = std::env::temp_dir().join("minksurf-no-such-config.toml");
    let out = run(&["curvatures", "--config", missing.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inadmissible_norm_exits_1() {
    let config = write_temp_config(
        "inadmissible.toml",
        r#"
        [norm]
        family = "quartic"
        eps = 1e8

        [surface]
        family = "torus"
        major = 2.0
        minor = 0.5
        grid = [4, 4]

        [options]
        admissible_tol = 1e-2
        admissible_samples = 200
        "#,
    );
    let out = run(&["curvatures", "--config", config.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("admissibility"));
    assert!(out.stdout.is_empty(), "no curvature rows on refusal");
}

#[test]
fn profile_and_lines_commands_run() {
    let config = workspace_config("torus_quartic.toml");
    let config = config.to_str().unwrap();

    let profile = run(&["normal-profile", "--config", config], Some("2"));
    assert!(profile.status.success());
    let body = String::from_utf8(profile.stdout).unwrap();
    assert!(body.starts_with("theta,k,lambda1,lambda2\n"));
    assert_eq!(body.lines().count(), 1 + 64);

    let lines = run(&["lines", "--config", config], Some("2"));
    assert!(lines.status.success());
    let body = String::from_utf8(lines.stdout).unwrap();
    assert!(body.starts_with("trace,step,u,v,p_x,p_y,p_z,lambda,residual,stop_reason\n"));
    assert!(body.contains("principal_1"));

    let out_path =
        std::env::temp_dir().join(format!("minksurf-sections-{}.csv", std::process::id()));
    let sections = run(
        &[
            "sections",
            "--config",
            config,
            "--out",
            out_path.to_str().unwrap(),
        ],
        Some("2"),
    );
    assert!(sections.status.success());
    let body = std::fs::read_to_string(&out_path).unwrap();
    assert!(body.starts_with(
        "dir_index,theta,sample_index,u,v,p_x,p_y,p_z,plane_x,plane_y,circ_curvature,k_formula\n"
    ));
}
