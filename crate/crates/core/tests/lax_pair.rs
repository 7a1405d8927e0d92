use llx_core::classify::OdeSystem;
use llx_core::expr::{is_identically_zero, parse, Expr, SampleDomain};
use llx_core::fixtures::fixture;
use llx_core::integral::{first_integral, FirstIntegral, IntegralOptions};
use llx_core::lax::*;
use llx_core::odesolve::{integrate, InitialCondition, Tolerances};

fn corpus_integral(name: &str) -> (OdeSystem, FirstIntegral) {
    let fx = fixture(name).unwrap();
    let sys = fx.system().unwrap();
    let opts = IntegralOptions {
        anchor: Some(fx.anchor()),
        ..IntegralOptions::default()
    };
    let (_, fi) = first_integral(&sys, &opts).unwrap();
    (sys, fi.unwrap())
}

#[test]
fn example_two_entries_are_polynomial() {
    let (sys, fi) = corpus_integral("ex2");
    let lp = build_lax(&fi, &sys).unwrap();
    let same = |got: Expr, want: &str| {
        let diff = got - parse(want).unwrap();
        is_identically_zero(&diff, &sys.domain, &sys.params, 1e-12).unwrap()
    };
    let (u, m) = (lp.u_expr.unwrap(), lp.m_expr.unwrap());
    assert!(!u.to_string().contains("sqrt"), "{u}");
    assert!(same(u, "alpha*(y^2+z*y)"));
    assert!(same(m, "alpha*(2*y+z)/2"));
}

#[test]
fn example_two_trace_and_spectrum_at_a_point() {
    let (sys, fi) = corpus_integral("ex2");
    let lp = build_lax(&fi, &sys).unwrap();
    let (z, y, yp) = (1.0, 1.0, -1.0 / 3.0);
    assert!((fi.evaluate(z, y, yp).unwrap() - 4.0).abs() < 1e-12);
    assert!((lp.trace_power(2, z, y, yp).unwrap().re - 8.0).abs() < 1e-12);
    assert!((lp.trace_invariant(2, z, y, yp).unwrap().re - 4.0).abs() < 1e-12);
    assert!(lp.trace_power(1, z, y, yp).unwrap().norm() < 1e-15);
    assert!(lp.trace_power(3, z, y, yp).unwrap().norm() < 1e-12);
    let (hi, lo) = lp.eigenvalues(z, y, yp).unwrap();
    assert!((hi.re - 2.0).abs() < 1e-12 && hi.im.abs() < 1e-12);
    assert!((lo.re + 2.0).abs() < 1e-12 && lo.im.abs() < 1e-12);
    assert!(lp.trace_power(9, z, y, yp).is_err());
}

#[test]
fn example_two_residual_and_scaled_control() {
    let (sys, fi) = corpus_integral("ex2");
    let lp = build_lax(&fi, &sys).unwrap();
    let traj = integrate(
        &sys,
        InitialCondition::new(0.5, 1.0, 0.0),
        3.0,
        Tolerances::new(1e-10, 1e-12),
    )
    .unwrap();
    let rep = lax_residual(&lp, &sys, &traj).unwrap();
    assert!(rep.max <= 1e-6, "{}", rep.max);
    assert!(rep.skipped.is_empty());
    assert!(rep.per_sample.iter().all(|&r| r >= 0.0));
    let fd = lax_residual_fd(&lp, &sys, &traj).unwrap();
    assert!(fd.max <= 1e-5, "{fd:?}");
    let bad = lax_residual(&lp.with_m_scale(1.1), &sys, &traj).unwrap();
    assert!(bad.max > 1e-2, "{}", bad.max);
}

#[test]
fn example_six_matches_the_alternative_form_of_m() {
    let (sys, fi) = corpus_integral("ex6");
    let lp = build_lax(&fi, &sys).unwrap();
    let r = alternative_m_residual(&lp, &sys)
        .unwrap()
        .expect("A is z-free");
    assert!(r < 1e-12, "{r}");
    let (sys2, fi2) = corpus_integral("ex2");
    let lp2 = build_lax(&fi2, &sys2).unwrap();
    assert_eq!(alternative_m_residual(&lp2, &sys2).unwrap(), None);
}

#[test]
fn example_one_spectrum_is_constant_along_the_flow() {
    let fx = fixture("ex1").unwrap();
    let (sys, fi) = corpus_integral("ex1");
    let lp = build_lax(&fi, &sys).unwrap();
    let traj = integrate(&sys, fx.ic(), fx.span, Tolerances::default()).unwrap();
    let iso = isospectrality(&lp, &traj).unwrap();
    assert!(iso.eigenvalue_drift <= 1e-6, "{iso:?}");
    assert!(iso.trace_drift <= 1e-6, "{iso:?}");
}

#[test]
fn vanishing_b_gives_a_diagonal_pair() {
    let sys =
        OdeSystem::parse("3*y^2+z", "y", Default::default(), SampleDomain::default()).unwrap();
    let (_, fi) = first_integral(&sys, &IntegralOptions::default()).unwrap();
    let fi = fi.unwrap();
    let lp = build_lax(&fi, &sys).unwrap();
    assert!(lp.degenerate);
    let p = lp.at(0.5, 0.7, 0.2).unwrap();
    assert_eq!(p.l[0][1].norm(), 0.0);
    assert_eq!(frobenius(&p.m), 0.0);
    let traj = integrate(
        &sys,
        InitialCondition::new(0.0, 0.5, 0.0),
        2.0,
        Tolerances::default(),
    )
    .unwrap();
    assert!(lax_residual(&lp, &sys, &traj).unwrap().max < 1e-12);
    let a = fi.a.value(0.5, 0.7).unwrap();
    let (hi, lo) = lp.eigenvalues(0.5, 0.7, -a).unwrap();
    assert!(hi.norm() < 1e-12 && lo.norm() < 1e-12);
}

#[test]
fn corpus_trace_identities_hold() {
    for name in ["ex1", "ex2", "ex3", "ex4", "ex5", "ex6"] {
        let (sys, fi) = corpus_integral(name);
        let lp = build_lax(&fi, &sys).unwrap();
        let t = trace_identities(&lp, &sys, 50).unwrap();
        assert_eq!(t.points, 50);
        assert!(t.trace_l <= 1e-12 && t.odd_traces <= 1e-12, "{name}: {t:?}");
        assert!(t.half_trace_vs_integral <= 1e-9, "{name}: {t:?}");
        assert_eq!(t.m_symmetric_part, 0.0);
    }
}
