use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perspeed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("perspeed-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn eig_of_single_species_is_growth_rate() {
    let out = run(&["eig", "--config", &data("reference.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "eig");
    assert!((r["results"]["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
#[allow(clippy::approx_constant)]
fn eig_invasion_family_at_optimal_mu() {
    // lambda0(mu) = mu^2 + 1/2 for the reference data.
    let dir = scratch("eig");
    let csv = dir.join("psi.csv");
    let out = run(&[
        "eig",
        "--config",
        &data("reference.json"),
        "--family",
        "lambda0",
        "--mu",
        "0.7071068",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let lambda = report(&out)["results"]["lambda"].as_f64().unwrap();
    assert!((lambda - (0.7071068f64.powi(2) + 0.5)).abs() < 1e-9, "{lambda}");
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("x,psi\n"));
    assert_eq!(text.lines().count(), 65);
}

#[test]
fn negative_mu_is_accepted() {
    let out = run(&["eig", "--config", &data("reference.json"), "--family", "lambda0", "--mu", "-1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((report(&out)["results"]["lambda"].as_f64().unwrap() - 1.5).abs() < 1e-9);
}

#[test]
fn missing_field_is_a_config_error() {
    let out = run(&["eig", "--config", &data("missing_a11.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("competition.a11"));
}

#[test]
fn unreadable_config_is_a_config_error() {
    let out = run(&["speed", "--config", "/nonexistent/model.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn speed_of_reference_model_is_determinate() {
    let out = run(&["speed", "--config", &data("reference.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = &report(&out)["results"];
    assert!((r["c0_plus"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-7);
    assert_eq!(r["linearly_determinate"], true);
    assert!(r["statement"].as_str().unwrap().starts_with("linearly determinate"));
}

#[test]
fn fast_resident_is_not_certified() {
    // 2 (d1 - d2) mu0^2 + a2 - a1 < 0 once d2 exceeds 1.5.
    let out = run(&["speed", "--config", &data("fast_resident.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = &report(&out)["results"];
    assert_eq!(r["d1"], true);
    assert_eq!(r["d2"], false);
    assert_eq!(r["linearly_determinate"], false);
}

#[test]
fn failed_hypothesis_exits_three_with_report() {
    let out = run(&["speed", "--config", &data("invader_dies.json")]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["results"]["hypotheses"]["h1"], false);
    assert!(r["results"]["speed"].is_null());
}

#[test]
fn check_reports_every_hypothesis() {
    let out = run(&["check", "--config", &data("invader_dies.json")]);
    assert_eq!(out.status.code(), Some(0));
    let r = &report(&out)["results"];
    for key in ["h1_h2", "h3", "h4", "h5", "determinacy", "quasimonotone"] {
        assert!(!r[key].is_null(), "{key}");
    }
    assert_eq!(r["h1_h2"]["holds"], false);
    assert!(r["determinacy"]["error"].is_string());
    let ok = report(&run(&["check", "--config", &data("reference.json")]));
    assert_eq!(ok["results"]["quasimonotone"]["cooperative"], true);
}

#[test]
fn lambda_curve_matches_closed_form() {
    let dir = scratch("curve");
    let path = dir.join("curve.csv");
    let out = run(&[
        "lambda-curve",
        "--config",
        &data("reference.json"),
        "--mu-min",
        "0.5",
        "--mu-max",
        "1.5",
        "--points",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["mu", "lambda", "lambda_over_mu"]);
    let rows: Vec<Vec<f64>> = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert!((r[1] - (r[0] * r[0] + 0.5)).abs() < 1e-12);
        assert!((r[2] - r[1] / r[0]).abs() < 1e-12);
    }
}

#[test]
fn habitat_dispersion_against_grid() {
    let out = run(&["habitat", "--grid-n", "128"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &report(&out)["results"];
    let c = r["dispersion"]["c0_plus"].as_f64().unwrap();
    assert!((c - 1.225257).abs() < 1e-5, "{c}");
    assert!(r["grid"]["relative_difference"].as_f64().unwrap().abs() < 1e-5);
}

#[test]
fn invalid_habitat_is_a_config_error() {
    let out = run(&["habitat", "--a", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_one_trace_per_level() {
    let dir = scratch("sim");
    let out = run(&[
        "simulate",
        "--config",
        &data("reference.json"),
        "--x-min",
        "-10",
        "--x-max",
        "30",
        "--t-final",
        "10",
        "--theta",
        "0.5",
        "--theta",
        "0.25",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["results"]["fronts"].as_array().unwrap().len(), 2);
    for theta in ["0.5", "0.25"] {
        let text = std::fs::read_to_string(dir.join(format!("front_trace_theta_{theta}.csv"))).unwrap();
        assert!(text.starts_with("t,position\n"));
        assert_eq!(text.lines().count(), 22);
    }
}

#[test]
fn contaminated_run_exits_four() {
    let out = run(&[
        "simulate",
        "--config",
        &data("reference.json"),
        "--x-min",
        "-5",
        "--x-max",
        "8",
        "--t-final",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("boundary"));
}

#[test]
fn bad_dt_is_a_config_error() {
    let out = run(&["simulate", "--config", &data("reference.json"), "--dt", "fast"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn attractivity_warns_when_tolerance_missed() {
    let out = run(&[
        "simulate",
        "--config",
        &data("reference.json"),
        "--mode",
        "attractivity",
        "--t-final",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(16));
    let r = report(&out);
    assert!(r["results"]["reached_at"].is_null());
    assert_eq!(r["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn reports_are_byte_identical() {
    for args in [
        vec!["speed", "--config", &data("reference.json")],
        vec!["habitat"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn timings_are_opt_in() {
    let plain = report(&run(&["speed", "--config", &data("reference.json")]));
    assert!(plain.get("timings").is_none());
    let timed = report(&run(&["--timings", "speed", "--config", &data("reference.json")]));
    assert!(timed["timings"].is_object());
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["speed", "--config", &data("fast_resident.json")];
    let one = Command::new(env!("CARGO_BIN_EXE_perspeed"))
        .args(args)
        .env("PERSPEED_THREADS", "1")
        .output()
        .unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_perspeed"))
        .args(args)
        .env("PERSPEED_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(one.stdout, four.stdout);
}

fn curve(config: &str, dir: &str) -> Vec<[f64; 2]> {
    let path = scratch(dir).join("curve.csv");
    let out = run(&[
        "lambda-curve",
        "--config",
        &data(config),
        "--points",
        "17",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    csv::Reader::from_path(&path)
        .unwrap()
        .records()
        .map(|r| {
            let r = r.unwrap();
            [r[0].parse().unwrap(), r[1].parse().unwrap()]
        })
        .collect()
}

#[test]
fn lambda_curve_is_even_without_drift() {
    let rows = curve("reference.json", "even");
    assert_eq!(rows.len(), 17);
    for k in 0..17 {
        assert_eq!(rows[k][0], -rows[16 - k][0]);
        assert!((rows[k][1] - rows[16 - k][1]).abs() < 1e-12);
    }
}

#[test]
fn raising_growth_shifts_curve() {
    // u2* does not depend on b1, so the invasion potential moves by 0.1.
    let base = curve("reference.json", "base");
    let up = curve("raised_growth.json", "up");
    for (a, b) in base.iter().zip(&up) {
        assert!((b[1] - a[1] - 0.1).abs() < 1e-12, "{a:?} {b:?}");
    }
}

#[test]
fn curve_to_stdout_without_out() {
    let out = run(&["lambda-curve", "--config", &data("reference.json"), "--points", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("mu,lambda,lambda_over_mu"));
    assert_eq!(text.lines().count(), 4);
}
