use std::path::Path;
use std::process::{Command, Output};

use annulus_nls::radial::{residual, Profile, ProblemSpec};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_annulus-nls"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn exit_codes_follow_the_outcome() {
    let ok = run(&["eigen", "--N", "3"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("9.8696044"));
    assert_eq!(run(&["ground", "--p", "4", "--lambda", "-20"]).status.code(), Some(4));
    assert_eq!(run(&["ground", "--N", "3", "--p", "7", "--lambda", "1"]).status.code(), Some(4));
    assert_eq!(run(&["ground", "--p", "4", "--lambda", "1", "--bogus"]).status.code(), Some(4));
    assert_eq!(run(&["solve", "--p", "8", "--mass", "1e9", "--points", "16"]).status.code(), Some(2));
    assert_eq!(run(&["batch", "--file", "/nonexistent/batch.json"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn curve_output_has_the_documented_header_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["curve", "--p", "8", "--points", "12", "--lambda-max", "500", "--out", "run"];
    for sub in ["a", "b"] {
        std::fs::create_dir(dir.path().join(sub)).unwrap();
        let st = bin().args(args).current_dir(dir.path().join(sub)).status().unwrap();
        assert!(st.success());
    }
    let read = |sub: &str, name: &str| std::fs::read(dir.path().join(sub).join("run").join(name)).unwrap();
    let csv = String::from_utf8(read("a", "curve.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("lambda,mass,dmass_dlambda,umax,rbar,sslope"));
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 6));
    for name in ["curve.csv", "curve.svg", "report.json"] {
        assert_eq!(read("a", name), read("b", name), "{name}");
    }
}

#[test]
fn asymptotics_report_carries_the_limit_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("asym");
    let st = run(&["asymptotics", "--p", "4", "--lambda-min", "250", "--lambda-max", "4000", "--points", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let doc = report(&out);
    let res = &doc["results"]["asymptotics"];
    for key in [
        "lambdas",
        "sup_errors",
        "amplitude_ratios",
        "r_bars",
        "moment_errors",
        "masses",
        "predicted_masses",
        "fitted_mass_exponent",
        "expected_mass_exponent",
    ] {
        assert!(!res[key].is_null(), "missing {key}");
    }
    assert_eq!(res["lambdas"].as_array().unwrap().len(), 3);
    assert!(out.join("omega.svg").exists());
}

#[test]
fn profile_csv_reloads_to_the_same_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    assert!(run(&["ground", "--N", "3", "--p", "4", "--lambda", "25", "--out", out.to_str().unwrap()]).status.success());
    let doc = report(&out);
    let stored = doc["results"]["ground"]["residual_inf"].as_f64().unwrap();
    let file = std::io::BufReader::new(std::fs::File::open(out.join("profile.csv")).unwrap());
    let prof = Profile::read_csv(ProblemSpec::new(3, 4.0, 25.0).unwrap(), file).unwrap();
    assert!((residual(&prof) - stored).abs() <= 1e-12 * stored.max(1.0));
}

#[test]
fn echoed_configuration_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let st = run(&["evolve", "--p", "4", "--lambda", "5", "--T", "1", "--mode", "random-smooth", "--seed", "4", "--out", first.to_str().unwrap()]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let mut config = report(&first)["provenance"]["config"].clone();
    let second = dir.path().join("second");
    config["out"] = Value::String(second.to_str().unwrap().into());
    let batch = dir.path().join("batch.json");
    std::fs::write(&batch, serde_json::to_string(&vec![config]).unwrap()).unwrap();
    assert!(run(&["batch", "--file", batch.to_str().unwrap()]).status.success());
    assert_eq!(
        std::fs::read(first.join("trace.csv")).unwrap(),
        std::fs::read(second.join("trace.csv")).unwrap()
    );
    assert_eq!(report(&first)["results"], report(&second)["results"]);
}

#[test]
fn batch_runs_every_entry_under_a_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.json");
    std::fs::write(
        &batch,
        r#"[
            {"command": "eigen", "N": 2},
            {"command": "ground", "N": 2, "p": 6, "lambda": 12},
            {"command": "ground", "N": 2, "p": 4, "lambda": -50}
        ]"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let res = bin()
        .args(["batch", "--file", batch.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("ANNULUS_NLS_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(4));
    assert!(out.join("0").join("report.json").exists());
    assert!(out.join("1").join("profile.csv").exists());
    assert!(!out.join("2").join("report.json").exists());
    let text = String::from_utf8_lossy(&res.stdout);
    assert_eq!(text.lines().count(), 3);
}
