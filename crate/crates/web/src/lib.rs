//! Browser bindings: analyze a system, sample its trajectory for plotting
//! and construct Liénard pairs. Every function takes and returns JSON text
//! so the page needs no generated type definitions.

use std::collections::BTreeMap;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use llx_core::fixtures::{fixture, CORPUS};
use llx_core::report::{
    analyze_full, construct_spec, to_latex_report, ConstructConstants, ConstructMode, SystemSpec,
};

// The exported functions are thin wrappers so the logic also runs in
// native tests, where `JsValue` cannot be constructed.
type Res = Result<String, String>;

fn js(r: Res) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn parse_spec(spec_json: &str) -> Result<SystemSpec, String> {
    serde_json::from_str(spec_json).map_err(|e| format!("spec: {e}"))
}

/// Names and titles of the built-in systems.
#[wasm_bindgen]
pub fn corpus() -> String {
    let list: Vec<_> = CORPUS
        .iter()
        .map(|f| serde_json::json!({ "name": f.name, "title": f.title }))
        .collect();
    serde_json::Value::from(list).to_string()
}

/// The spec of a built-in system.
#[wasm_bindgen]
pub fn fixture_spec(name: &str) -> Result<String, JsValue> {
    js(fixture_spec_impl(name))
}

fn fixture_spec_impl(name: &str) -> Res {
    let fx = fixture(name).ok_or_else(|| format!("unknown system {name}"))?;
    serde_json::to_string_pretty(&SystemSpec::from_fixture(fx)).map_err(err)
}

#[derive(Serialize)]
struct Analysis {
    report: llx_core::report::Report,
    latex: String,
    exit_code: i32,
}

/// Full analysis of a spec: the report, the LaTeX rendering of `L`, `M`
/// and `I`, and the exit code the command-line tool would return.
#[wasm_bindgen]
pub fn analyze(spec_json: &str) -> Result<String, JsValue> {
    js(analyze_impl(spec_json))
}

fn analyze_impl(spec_json: &str) -> Res {
    let spec = parse_spec(spec_json)?;
    let an = analyze_full(&spec).map_err(err)?;
    let out = Analysis {
        latex: to_latex_report(&an),
        exit_code: an.report.exit_code(),
        report: an.report,
    };
    serde_json::to_string(&out).map_err(err)
}

#[derive(Serialize, Default)]
struct Series {
    z: Vec<f64>,
    y: Vec<f64>,
    yp: Vec<f64>,
    /// First integral, `null` where it cannot be evaluated.
    integral: Vec<Option<f64>>,
    /// Frobenius norm of the Lax residual, `null` where skipped.
    lax: Vec<Option<f64>>,
    halted: Option<String>,
}

/// Trajectory of a spec with the integral and the Lax residual at every
/// sample.
#[wasm_bindgen]
pub fn trajectory(spec_json: &str) -> Result<String, JsValue> {
    js(trajectory_impl(spec_json))
}

fn trajectory_impl(spec_json: &str) -> Res {
    let spec = parse_spec(spec_json)?;
    if spec.ic.is_none() {
        return Err("the spec has no initial condition".into());
    }
    let an = analyze_full(&spec).map_err(err)?;
    let traj = an.trajectory.expect("an initial condition was given");
    let flow = llx_core::lax::Flow::new(&an.system).map_err(err)?;
    let mut s = Series {
        halted: traj
            .halted
            .as_ref()
            .map(|h| format!("z={}: {}", h.z, h.reason)),
        ..Series::default()
    };
    for p in &traj.samples {
        s.z.push(p.z);
        s.y.push(p.y);
        s.yp.push(p.yp);
        s.integral.push(
            an.integral
                .as_ref()
                .and_then(|fi| fi.evaluate(p.z, p.y, p.yp).ok()),
        );
        s.lax.push(an.lax.as_ref().and_then(|lp| {
            lp.residual_matrix(&flow, p.z, p.y, p.yp)
                .ok()
                .map(|(r, _)| llx_core::lax::frobenius(&r))
        }));
    }
    serde_json::to_string(&s).map_err(err)
}

/// Builds a Liénard pair from one coefficient. `mode` is `g-from-f` or
/// `f-from-g`; `params_json` maps parameter names to values.
#[wasm_bindgen]
pub fn construct(
    mode: &str,
    expr: &str,
    constant: f64,
    params_json: &str,
) -> Result<String, JsValue> {
    js(construct_impl(mode, expr, constant, params_json))
}

fn construct_impl(mode: &str, expr: &str, constant: f64, params_json: &str) -> Res {
    let params: BTreeMap<String, f64> = if params_json.trim().is_empty() {
        BTreeMap::new()
    } else {
        serde_json::from_str(params_json).map_err(|e| format!("params: {e}"))?
    };
    let (mode, k) = match mode {
        "g-from-f" => (
            ConstructMode::GFromF,
            ConstructConstants {
                kappa: constant,
                ..ConstructConstants::default()
            },
        ),
        "f-from-g" => (
            ConstructMode::FFromG,
            ConstructConstants {
                nu: constant,
                ..ConstructConstants::default()
            },
        ),
        other => return Err(format!("unknown mode {other}")),
    };
    let spec = construct_spec(mode, expr, k, params).map_err(err)?;
    serde_json::to_string_pretty(&spec).map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_lists_six_systems() {
        let v: serde_json::Value = serde_json::from_str(&corpus()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 6);
    }

    #[test]
    fn analyze_round_trips_a_fixture_spec() {
        let spec = fixture_spec_impl("ex2").unwrap();
        let v: serde_json::Value = serde_json::from_str(&analyze_impl(&spec).unwrap()).unwrap();
        assert_eq!(v["report"]["case"], "Generic");
        assert_eq!(v["exit_code"], 0);
        assert!(v["latex"].as_str().unwrap().contains("pmatrix"));
    }

    #[test]
    fn trajectory_series_have_matching_lengths() {
        let spec = fixture_spec_impl("ex6").unwrap();
        let v: serde_json::Value = serde_json::from_str(&trajectory_impl(&spec).unwrap()).unwrap();
        let n = v["z"].as_array().unwrap().len();
        assert!(n > 200);
        for key in ["y", "yp", "integral", "lax"] {
            assert_eq!(v[key].as_array().unwrap().len(), n);
        }
    }

    #[test]
    fn construct_reports_bad_input_as_text() {
        assert!(construct_impl("g-from-f", "y", 0.0, "")
            .unwrap_err()
            .contains("kappa"));
        assert!(construct_impl("sideways", "y", 1.0, "").is_err());
        let spec = construct_impl("f-from-g", "y^3+a*y", 0.5, r#"{"a": 1}"#).unwrap();
        assert!(analyze_impl(&spec).is_ok());
    }
}
