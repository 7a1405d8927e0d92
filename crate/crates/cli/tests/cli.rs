use std::io::Write;
use std::process::{Command, Output, Stdio};

fn llx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llx"))
        .args(args)
        .env_remove("LLX_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn analyze_example_two_passes() {
    let out = llx(&["analyze", "--fixture", "ex2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["case"], "Generic");
    assert_eq!(r["pass"], true);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["seed"], 20_190_412);
    assert!(r["lax"]["max"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn perturbed_example_one_is_rejected_with_evidence() {
    let out = llx(&[
        "analyze",
        "--f",
        "beta*y/(y^2+1)^2",
        "--g",
        "alpha*(1.03*y^2+1)",
        "--param",
        "alpha=1",
        "--param",
        "beta=1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    assert_eq!(r["case"], "NoQuadraticIntegral");
    let worst = r["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["residual"].as_f64().unwrap())
        .fold(0.0, f64::max);
    assert!(worst > 1e-3, "{worst}");
}

#[test]
fn malformed_expression_reports_its_column() {
    let out = llx(&["analyze", "--f", "y+*z", "--g", "y"]);
    assert_eq!(out.status.code(), Some(64));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("column 3"), "{err}");
}

#[test]
fn corpus_with_controls_succeeds() {
    let out = llx(&["corpus", "--controls"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    assert!(lines[4].starts_with("ex3") && lines[4].contains("PyZero"));
    assert!(lines[5].contains("NoQuadraticIntegral"));
}

#[test]
fn corpus_output_is_independent_of_thread_timing() {
    let a = llx(&["corpus", "--json"]);
    let b = llx(&["corpus", "--json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn tolerance_domain_and_anchor_flags_reach_the_report() {
    let out = llx(&[
        "analyze",
        "--fixture",
        "ex6",
        "--rtol",
        "1e-9",
        "--atol",
        "1e-11",
        "--domain",
        "0.2,1.5,0.3,1.8",
        "--anchor",
        "0,0.5,-1",
        "--ic",
        "0,-0.2,0.1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["spec"]["tolerances"]["rtol"], 1e-9);
    assert_eq!(r["spec"]["domain"]["y"], serde_json::json!([0.3, 1.8]));
    assert_eq!(r["spec"]["anchor"]["value"], -1.0);
    assert_eq!(r["spec"]["ic"][1], -0.2);
}

#[test]
fn seed_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_llx"))
        .args(["analyze", "--fixture", "ex6"])
        .env("LLX_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["seed"], 7);
}

#[test]
fn latex_shows_the_example_two_entries() {
    let out = llx(&["emit", "--fixture", "ex2", "--format", "latex"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains(r"y' + \frac{y}{2 y + z}"), "{text}");
    assert!(text.contains(r"\alpha y^{2} + \alpha z y"), "{text}");
}

#[test]
fn csv_integral_column_is_constant() {
    let out = llx(&["emit", "--fixture", "ex1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z,y,yp,I"));
    let values: Vec<f64> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let i0 = values[0];
    assert!(values.len() > 200);
    assert!(values
        .iter()
        .all(|v| (v - i0).abs() <= 1e-7 * (1.0 + i0.abs())));
}

#[test]
fn constructed_spec_feeds_back_into_analyze() {
    let out = llx(&[
        "construct",
        "--mode",
        "f-from-g",
        "--expr",
        "y^3+alpha*y+beta",
        "--nu",
        "0.05",
        "--param",
        "alpha=1",
        "--param",
        "beta=0.1",
        "--ic",
        "0,0.5,0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut spec = json(&out);
    spec["span"] = serde_json::json!(-5.0);
    let mut child = Command::new(env!("CARGO_BIN_EXE_llx"))
        .args(["analyze", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(spec.to_string().as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["case"], "LienardAutonomous");
}

#[test]
fn construct_rejects_a_zero_constant() {
    let out = llx(&["construct", "--mode", "g-from-f", "--expr", "y", "--kappa", "0"]);
    assert_eq!(out.status.code(), Some(70));
    let out = llx(&["construct", "--mode", "f-from-g", "--expr", "y^3+z", "--nu", "1"]);
    assert_ne!(out.status.code(), Some(0));
}
