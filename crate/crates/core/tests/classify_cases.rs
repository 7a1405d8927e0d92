//! Every branch of the classifier against systems with a known integral.

use llx_core::classify::{classify, CaseTag, OdeSystem};
use llx_core::expr::{ParamBinding, SampleDomain};

fn run(f: &str, g: &str, params: &[(&str, f64)], y: (f64, f64)) -> (CaseTag, CaseTag, f64) {
    let p: ParamBinding = params.iter().copied().collect();
    let sys = OdeSystem::parse(f, g, p, SampleDomain::new((0.1, 2.0), y)).unwrap();
    let (rep, _) = classify(&sys).unwrap();
    (rep.branch, rep.verdict, rep.max_residual())
}

fn assert_case(f: &str, g: &str, params: &[(&str, f64)], y: (f64, f64), want: CaseTag) {
    let (branch, verdict, res) = run(f, g, params, y);
    assert_eq!(branch, want, "branch for f={f}, g={g}");
    assert_eq!(verdict, want, "verdict for f={f}, g={g} (residual {res:e})");
}

#[test]
fn lienard_examples() {
    assert_case(
        "beta*y/(y^2+1)^2",
        "alpha*(y^2+1)",
        &[("alpha", 1.0), ("beta", 1.0)],
        (0.1, 2.0),
        CaseTag::LienardAutonomous,
    );
    assert_case(
        "-alpha*(1-y^2)",
        "3*beta/(y*(y^2-3))",
        &[("alpha", 1.0), ("beta", 1.0)],
        (2.0, 3.0),
        CaseTag::LienardAutonomous,
    );
    assert_case(
        "-nu*(3*y^2+alpha)/(y^3+alpha*y+beta)^2",
        "y^3+alpha*y+beta",
        &[("alpha", 1.0), ("beta", 0.1), ("nu", 0.05)],
        (0.1, 2.0),
        CaseTag::LienardAutonomous,
    );
}

#[test]
fn generic_examples() {
    assert_case(
        "z/(2*y+z)^2",
        "alpha^2*(2*y^3+3*z*y^2+z^2*y) - y/(2*y+z)^2",
        &[("alpha", 1.0)],
        (0.1, 2.0),
        CaseTag::Generic,
    );
    assert_case(
        "-alpha*(1-y^2)",
        "beta*y*exp(-2*alpha*z)/(y^2-3)^2",
        &[("alpha", 1.0), ("beta", -1.0)],
        (2.0, 3.0),
        CaseTag::Generic,
    );
}

#[test]
fn py_zero_examples() {
    assert_case(
        "exp(-alpha*z)/(y+delta)^2",
        "alpha*exp(-alpha*z)/(y+delta) + y + delta",
        &[("alpha", 1.0), ("delta", 1.0)],
        (0.1, 2.0),
        CaseTag::PyZero,
    );
    assert_case(
        "z/(2*y+z)^2",
        "y - y/(2*y+z)^2 + z/2",
        &[],
        (0.1, 2.0),
        CaseTag::PyZero,
    );
    assert_case("-z/y^2", "y + 1/y", &[], (0.1, 2.0), CaseTag::PyZero);
}

#[test]
fn fy_zero_and_degenerate_s_examples() {
    assert_case("1", "(3/2)*y^2*exp(3*z)", &[], (0.1, 2.0), CaseTag::FyZero);
    assert_case("1/3", "(3/2)*y^2*exp(z)", &[], (0.1, 2.0), CaseTag::FyZero);
    assert_case("3*y^2+z", "y", &[], (0.1, 2.0), CaseTag::SZeroTZero);
}

#[test]
fn s_zero_example() {
    assert_case(
        "1/(2*sqrt(y+z^2))",
        "1 + z/sqrt(z^2+y) - z - sqrt(z^2+y)",
        &[],
        (0.1, 2.0),
        CaseTag::SZero,
    );
}

#[test]
fn d_zero_example() {
    // A = (sqrt(exp(-z) + y*exp(z/2)) - exp(-z/2)) * exp(-z), f = A_y and
    // g = A_z + B_y/2 with B_y = A - y/2.
    let w = "sqrt(exp(-z)+y*exp(z/2))";
    let a = format!("(({w})-exp(-z/2))*exp(-z)");
    let f = format!("exp(-z/2)/(2*{w})");
    let az = format!("-({a}) + exp(-z)*(-exp(-z)+y*exp(z/2)/2)/(2*{w}) + exp(-z)*exp(-z/2)/2");
    let g = format!("{az} + (({a}) - y/2)/2");
    assert_case(&f, &g, &[], (0.1, 2.0), CaseTag::DZero);
}

#[test]
fn perturbations_are_rejected() {
    for (f, g, params, y) in [
        (
            "beta*y/(y^2+1)^2",
            "alpha*(1.03*y^2+1)",
            vec![("alpha", 1.0), ("beta", 1.0)],
            (0.1, 2.0),
        ),
        (
            "z/(2*y+z)^2",
            "alpha^2*(2*y^3+3*z*y^2+z^2*y) - 1.03*y/(2*y+z)^2",
            vec![("alpha", 1.0)],
            (0.1, 2.0),
        ),
        (
            "1.03*exp(-alpha*z)/(y+delta)^2",
            "alpha*exp(-alpha*z)/(y+delta) + y + delta",
            vec![("alpha", 1.0), ("delta", 1.0)],
            (0.1, 2.0),
        ),
    ] {
        let (_, verdict, res) = run(f, g, &params, y);
        assert_eq!(verdict, CaseTag::NoQuadraticIntegral, "f={f} g={g}");
        assert!(res > 1e-6, "residual {res:e} for f={f} g={g}");
    }
}
