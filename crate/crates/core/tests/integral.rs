use llx_core::classify::{autonomous_integral_test, classify, CaseTag, OdeSystem};
use llx_core::expr::{is_identically_zero, parse, Expr, ExprFn, ParamBinding, SampleDomain, Var};
use llx_core::field::Anchor;
use llx_core::fixtures::{fixture, Fixture, CORPUS};
use llx_core::integral::*;
use llx_core::odesolve::{conservation_drift, integrate, Tolerances};
use llx_core::report::{analyze_full, compare_with_fixture, SystemSpec};
use llx_core::Error;

fn build(fx: &Fixture) -> (OdeSystem, FirstIntegral) {
    let sys = fx.system().unwrap();
    let opts = IntegralOptions {
        anchor: Some(fx.anchor()),
        ..IntegralOptions::default()
    };
    let (report, fi) = first_integral(&sys, &opts).unwrap();
    assert!(report.passed(), "{}", fx.name);
    (sys, fi.unwrap())
}

fn same(sys: &OdeSystem, got: &Expr, want: &str) -> bool {
    let d = got - parse(want).unwrap();
    is_identically_zero(&d, &sys.domain, &sys.params, 1e-10).unwrap()
}

#[test]
fn corpus_matches_the_published_closed_forms() {
    for fx in &CORPUS {
        let an = analyze_full(&SystemSpec::from_fixture(fx)).unwrap();
        let cmp = compare_with_fixture(fx, &an, 20).unwrap();
        assert!(cmp.case_matches, "{}", fx.name);
        assert_eq!(cmp.points, 20);
        assert!(cmp.a_residual <= 1e-8, "{}: {:e}", fx.name, cmp.a_residual);
        assert!(cmp.b_residual <= 1e-8, "{}: {:e}", fx.name, cmp.b_residual);
    }
}

#[test]
fn closed_forms_where_the_partials_are_polynomial() {
    let (sys, fi) = build(fixture("ex1").unwrap());
    let b = fi.b.as_expr().expect("closed B");
    assert!(same(&sys, b, "(2*alpha/3)*y^3 + 2*alpha*y - alpha*beta*z"));
    assert!(same(&sys, fi.by_expr.as_ref().unwrap(), "2*alpha*(y^2+1)"));

    let (sys, fi) = build(fixture("ex6").unwrap());
    let b = fi.b.as_expr().expect("closed B");
    assert!(same(&sys, b, "y^4/2 + alpha*y^2 + 2*beta*y + 2*nu*z"));

    let (sys, fi) = build(fixture("ex2").unwrap());
    assert!(same(&sys, fi.a.as_expr().unwrap(), "y/(2*y+z)"));
    assert!(same(
        &sys,
        fi.by_expr.as_ref().unwrap(),
        "2*alpha^2*y*(y+z)*(2*y+z)"
    ));
    assert!(same(
        &sys,
        fi.bz_expr.as_ref().unwrap(),
        "2*alpha^2*y^2*(y+z)"
    ));
    assert!(same(&sys, fi.b.as_expr().unwrap(), "alpha^2*y^2*(y+z)^2"));
}

#[test]
fn example_five_path_integral_matches_the_logarithm() {
    let fx = fixture("ex5").unwrap();
    let (sys, fi) = build(fx);
    assert!(fi.b.as_path().is_some());
    let published = ExprFn::new(&parse(fx.b).unwrap(), &sys.params, 1e-6).unwrap();
    let offset = published.value(0.0, 2.0).unwrap();
    let pts = sys.domain.clone().with_count(10).points();
    assert_eq!(pts.len(), 10);
    for (z, y) in pts {
        let want = published.value(z, y).unwrap() - offset;
        assert!(
            (fi.b.value(z, y).unwrap() - want).abs() <= 1e-8,
            "({z}, {y})"
        );
    }
}

#[test]
fn path_integrals_do_not_depend_on_the_path() {
    for name in ["ex3", "ex4", "ex5"] {
        let (sys, fi) = build(fixture(name).unwrap());
        let gap = path_consistency(&fi, &sys, 20).unwrap().expect("path B");
        assert!(gap <= 1e-9, "{name}: {gap:e}");
    }
}

#[test]
fn evaluating_the_integral_at_known_points() {
    let (_, fi) = build(fixture("ex1").unwrap());
    assert!(fi.evaluate(0.0, 0.0, 0.5).unwrap().abs() < 1e-15);
    let (_, fi) = build(fixture("ex2").unwrap());
    assert!((fi.evaluate(1.0, 1.0, -1.0 / 3.0).unwrap() - 4.0).abs() < 1e-13);
}

#[test]
fn exact_pair_has_vanishing_b() {
    let sys =
        OdeSystem::parse("3*y^2+z", "y", ParamBinding::new(), SampleDomain::default()).unwrap();
    let (report, fi) = first_integral(&sys, &IntegralOptions::default()).unwrap();
    assert_eq!(report.verdict, CaseTag::SZeroTZero);
    let fi = fi.unwrap();
    assert!(fi.degenerate);
    for (z, y) in [(0.3, 0.4), (1.5, 1.9)] {
        let (_, bz, by) = fi.b.jet(z, y).unwrap();
        assert_eq!((bz, by), (0.0, 0.0));
        let a = fi.a.value(z, y).unwrap();
        assert_eq!(fi.evaluate(z, y, -a).unwrap(), 0.0);
    }
}

#[test]
fn corpus_relations_and_substitution_oracle() {
    for fx in &CORPUS {
        let (sys, fi) = build(fx);
        let r = relation_residuals(&fi, &sys).unwrap();
        assert!(r.samples >= 64, "{}", fx.name);
        assert!(r.max_relation() <= 1e-8, "{}: {r:?}", fx.name);
        assert!(r.substitution <= 1e-8, "{}: {r:?}", fx.name);
    }
}

#[test]
fn lienard_corpus_integrals_are_free_of_z_in_a() {
    for fx in CORPUS
        .iter()
        .filter(|f| f.expected == CaseTag::LienardAutonomous)
    {
        let (sys, fi) = build(fx);
        let a = fi.a.as_expr().expect("closed A");
        assert!(sys.zero(&a.diff(Var::Z)).unwrap(), "{}", fx.name);
    }
}

#[test]
fn shifting_b_shifts_the_integral_and_keeps_the_drift() {
    let fx = fixture("ex3").unwrap();
    let (sys, fi) = build(fx);
    let shifted = fi.with_b_offset(2.5).unwrap();
    for (z, y, yp) in [(0.2, 0.3, -1.0), (1.7, 1.1, 0.4)] {
        let d = shifted.evaluate(z, y, yp).unwrap() - fi.evaluate(z, y, yp).unwrap();
        assert!((d - 2.5).abs() < 1e-12);
    }
    let traj = integrate(&sys, fx.ic(), fx.span, Tolerances::default()).unwrap();
    let d0 = conservation_drift(&fi, &traj).unwrap();
    let d1 = conservation_drift(&shifted, &traj).unwrap();
    assert!((d0.absolute - d1.absolute).abs() <= 1e-12, "{d0:?} {d1:?}");
}

#[test]
fn anchors_fix_the_constant_of_b() {
    let fx = fixture("ex6").unwrap();
    let sys = fx.system().unwrap();
    let opts = IntegralOptions {
        anchor: Some(Anchor::new(1.0, 1.0, 3.0)),
        ..IntegralOptions::default()
    };
    let fi = first_integral(&sys, &opts).unwrap().1.unwrap();
    assert!((fi.b.value(1.0, 1.0).unwrap() - 3.0).abs() < 1e-13);
}

#[test]
fn g_from_f_examples() {
    let p = ParamBinding::new().with("alpha", 1.0).with("beta", 1.0);
    let dom = SampleDomain::new((0.1, 2.0), (2.0, 3.0));
    let f = parse("-alpha*(1-y^2)").unwrap();
    // κ = 1/(αβ) with α = β = 1.
    let g = lienard_g_from_f(&f, 1.0, 0.0).unwrap();
    let d = &g - parse("3*beta/(y*(y^2-3))").unwrap();
    assert!(is_identically_zero(&d, &dom, &p, 1e-12).unwrap());

    let g = lienard_g_from_f(&parse("1").unwrap(), 1.0, 1.0).unwrap();
    assert_eq!(g, parse("1/(y+1)").unwrap());
    let g = lienard_g_from_f(&parse("2*y").unwrap(), 1.0, 0.0).unwrap();
    let d = &g - parse("y^(-2)").unwrap();
    assert!(is_identically_zero(&d, &SampleDomain::default(), &p, 1e-12).unwrap());
    let sys = OdeSystem::new(parse("2*y").unwrap(), g, p, SampleDomain::default()).unwrap();
    let (report, _) = classify(&sys).unwrap();
    assert_eq!(report.verdict, CaseTag::LienardAutonomous);
    assert!(report.max_residual() <= 1e-12);
}

#[test]
fn f_from_g_examples() {
    let p = ParamBinding::new().with("alpha", 1.0).with("beta", 2.0);
    let dom = SampleDomain::default();
    // ν = -αβ/2, the sign that reproduces A = ν/g = -β/(2(y^2+1)).
    let f = lienard_f_from_g(&parse("alpha*(y^2+1)").unwrap(), -1.0).unwrap();
    let d = &f - parse("beta*y/(y^2+1)^2").unwrap();
    assert!(is_identically_zero(&d, &dom, &p, 1e-12).unwrap());

    let f = lienard_f_from_g(&parse("y^3+alpha*y+beta").unwrap(), 0.05).unwrap();
    let d = &f - parse("-0.05*(3*y^2+alpha)/(y^3+alpha*y+beta)^2").unwrap();
    assert!(is_identically_zero(&d, &dom, &p, 1e-12).unwrap());

    let f = lienard_f_from_g(&parse("4").unwrap(), 1.0).unwrap();
    assert!(f.is_zero_const());
    let err = OdeSystem::new(f, parse("4").unwrap(), ParamBinding::new(), dom);
    assert!(err.is_err());
}

#[test]
fn constructors_reject_bad_input() {
    let y = parse("y").unwrap();
    assert!(matches!(
        lienard_g_from_f(&y, 0.0, 1.0),
        Err(Error::Construction(_))
    ));
    assert!(matches!(
        lienard_f_from_g(&y, 0.0),
        Err(Error::Construction(_))
    ));
    let zy = parse("z*y").unwrap();
    assert!(lienard_g_from_f(&zy, 1.0, 1.0).is_err());
    assert!(lienard_f_from_g(&zy, 1.0).is_err());
    assert!(lienard_g_from_f(&parse("exp(y)").unwrap(), 1.0, 1.0).is_err());
}

#[test]
fn autonomous_integrals_need_a_vanishing_coefficient() {
    let p = ParamBinding::new().with("alpha", 1.0).with("beta", 1.0);
    let dom = SampleDomain::default();
    let t = |f: &str, g: &str| {
        autonomous_integral_test(&parse(f).unwrap(), &parse(g).unwrap(), &p, &dom).unwrap()
    };
    assert!(t("0", "y^3"));
    assert!(t("y", "0"));
    assert!(!t("beta*y/(y^2+1)^2", "alpha*(y^2+1)"));
}
