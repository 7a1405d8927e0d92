//! Construction of the quadratic first integral `I = (y' + A)^2 + B`.
//!
//! `A` comes from the closed form of the branch chosen by the classifier
//! (or, in two branches, from its partial derivatives), `B_y` from the
//! branch formula and `B_z = A B_y`. The branch formula for `B_y` is always
//! compared with `2 (g - A_z)`, and the pair `(B_y, B_z)` must be exact
//! before a potential is built from it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classify::{check_preconditions, classify, CaseTag, ClassifierState, OdeSystem};
use crate::error::{Error, Result};
use crate::expr::{
    max_residual, polynomial_potential, rational_from_f64, simplify, Expr, ExprFn, Rational, Var,
};
use crate::field::{Anchor, Field, PathField, Rate};

pub use crate::classify::autonomous_integral_test;

use Var::{Y, Z};

/// Threshold for the residual suite of the defining relations.
pub const RELATION_TOL: f64 = 1e-8;

/// Outcome of one numerical consistency check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(id: &str, residual: f64, threshold: f64) -> Check {
        Check {
            id: id.to_string(),
            residual,
            threshold,
            pass: residual <= threshold,
        }
    }
}

/// Gauges and mode for [`build_first_integral`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegralOptions {
    /// Anchor of `B`; the lower corner of the sampling domain with value 0
    /// when absent.
    pub anchor: Option<Anchor>,
    /// Value of `A` at the anchor point in the branches where `A` is
    /// reconstructed from its partials.
    pub a_value: f64,
    /// Build the integral the branch formulas would give even when the
    /// compatibility conditions fail. Failed checks are recorded rather
    /// than raised; this is how negative controls get something to verify.
    pub candidate: bool,
}

/// Partial derivatives of `B` as integrands, with their symbolic forms
/// when those exist.
#[derive(Clone)]
pub struct BPartials {
    pub by: Rate,
    pub bz: Rate,
    pub by_expr: Option<Expr>,
    pub bz_expr: Option<Expr>,
    pub checks: Vec<Check>,
}

/// `I = (y' + A)^2 + B` for a classified system.
#[derive(Clone, Debug)]
pub struct FirstIntegral {
    pub case: CaseTag,
    pub candidate: bool,
    pub a: Field,
    pub b: Field,
    pub by_expr: Option<Expr>,
    pub bz_expr: Option<Expr>,
    /// Anchor of `B`.
    pub anchor: Anchor,
    /// Anchor of `A` when it was reconstructed from its partials.
    pub a_anchor: Option<Anchor>,
    /// `B` vanishes identically, so `L` is diagonal and `M = 0`.
    pub degenerate: bool,
    /// Cross-check and exactness residuals gathered during construction.
    pub checks: Vec<Check>,
}

impl FirstIntegral {
    /// `(y' + A(z, y))^2 + B(z, y)`.
    pub fn evaluate(&self, z: f64, y: f64, yp: f64) -> Result<f64> {
        let w = yp + self.a.value(z, y)?;
        Ok(w * w + self.b.value(z, y)?)
    }

    /// The same integral with `B` re-anchored to a different value at the
    /// same base point.
    pub fn with_b_offset(&self, delta: f64) -> Result<FirstIntegral> {
        let shift = |e: &Expr| e + &Expr::from_f64(delta).expect("finite offset");
        let mut out = self.clone();
        out.anchor.value += delta;
        out.b = match &self.b {
            Field::Closed(e) => Field::Closed(e.with_expr(&shift(&e.expr))?),
            Field::Path(p) => Field::Path(Arc::new(p.shifted(delta))),
        };
        out.degenerate = false;
        Ok(out)
    }

    pub fn checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn rational(x: f64, what: &str) -> Result<Rational> {
    rational_from_f64(x).ok_or_else(|| Error::InvalidInput(format!("{what} must be finite")))
}

fn default_anchor(sys: &OdeSystem, opts: &IntegralOptions) -> Anchor {
    opts.anchor
        .unwrap_or(Anchor::new(sys.domain.z.0, sys.domain.y.0, 0.0))
}

fn require_nonzero(sys: &OdeSystem, name: &str, e: &Expr) -> Result<()> {
    if sys.zero(e)? {
        Err(Error::DenominatorVanishes(name.to_string()))
    } else {
        Ok(())
    }
}

/// Closed-form `A` of a branch, or `None` for the branches where only its
/// partials are known.
pub fn closed_form_a(state: &ClassifierState, case: CaseTag) -> Option<(Expr, &'static str, Expr)> {
    let k = &state.inv;
    let (f, g, fy, p, q, r, s, t, py) = (&k.f, &k.g, &k.fy, &k.p, &k.q, &k.r, &k.s, &k.t, &k.py);
    let fy2 = fy.powi(2);
    match case {
        CaseTag::Generic => Some((
            ((&k.pz - 2 * p * f) * r + 3 * p * &fy2 + (3 * f * py - &k.pzy) * fy) / s,
            "S",
            s.clone(),
        )),
        CaseTag::FyZero => Some((-(t / q), "g_yy", q.clone())),
        CaseTag::SZero => Some((
            (&k.tz * fy - t * f * fy - g * py * fy - q * t - 2 * t * py) / &k.d,
            "D",
            k.d.clone(),
        )),
        CaseTag::PyZero => Some((
            3 * (3 * fy.powi(3) - f * fy * r + &k.qy * fy - q * r) / r.powi(2),
            "f_yy",
            r.clone(),
        )),
        CaseTag::LienardAutonomous => Some((-(f * g / &k.gy), "g_y", k.gy.clone())),
        CaseTag::SZeroTZero | CaseTag::DZero | CaseTag::NoQuadraticIntegral => None,
    }
}

/// Coefficients of the linear transport `A_z = a - c A` in the branch
/// where `A` is known only through its partials, and the constant part
/// `k2` of `B_y = 2 (c A + k2)`.
fn transport_coefficients(state: &ClassifierState) -> (Expr, Expr, Expr) {
    let k = &state.inv;
    let (f, g, fy, p, q, r, py) = (&k.f, &k.g, &k.fy, &k.p, &k.q, &k.r, &k.py);
    let fy2 = fy.powi(2);
    let py2 = py.powi(2);
    let rfy = r * fy;
    let c = py / fy;
    let a = ((r * g - 2 * f * py) * fy + 2 * &py2 + q * py - 4 * p * &fy2) / &rfy;
    let k2 = (4 * p * &fy2 + 2 * f * py * fy - q * py - 2 * &py2) / &rfy;
    (a, c, k2)
}

/// `A` for a branch: a closed form, or a potential of `(A_y, A_z)`.
pub fn compute_a(
    sys: &OdeSystem,
    state: &ClassifierState,
    case: CaseTag,
    opts: &IntegralOptions,
) -> Result<(Field, Option<Anchor>, Vec<Check>)> {
    if !opts.candidate {
        check_preconditions(state, case)?;
    }
    let (params, guard) = (&sys.params, sys.domain.guard);
    if let Some((a, den_name, den)) = closed_form_a(state, case) {
        require_nonzero(sys, den_name, &den)?;
        return Ok((
            Field::closed(&simplify(&a), params, guard)?,
            None,
            Vec::new(),
        ));
    }
    let base = default_anchor(sys, opts);
    let anchor = Anchor::new(base.z0, base.y0, opts.a_value);
    let mut checks = Vec::new();
    let field = match case {
        CaseTag::SZeroTZero => {
            // A_y = f and A_z = g; exactness is the branch condition itself.
            let exact = max_residual(&(sys.f.diff(Z) - sys.g.diff(Y)), &sys.domain, params)?;
            checks.push(Check::new("exactness.a", exact.max, sys.tol));
            let (z0, y0) = (
                rational(anchor.z0, "anchor")?,
                rational(anchor.y0, "anchor")?,
            );
            let a0 = rational(anchor.value, "anchor value")?;
            match polynomial_potential(&sys.f, &sys.g, &z0, &y0, &a0) {
                Some(e) => Field::closed(&e, params, guard)?,
                None => Field::Path(Arc::new(PathField::from_partials(
                    Rate::expr(&sys.f, params, guard)?,
                    Rate::expr(&sys.g, params, guard)?,
                    anchor,
                ))),
            }
        }
        CaseTag::DZero => {
            require_nonzero(sys, "f_yy", &state.inv.r)?;
            let (a, c, _) = transport_coefficients(state);
            let path = Arc::new(PathField::with_linear_z(
                Rate::expr(&sys.f, params, guard)?,
                Rate::expr(&simplify(&a), params, guard)?,
                Rate::expr(&simplify(&c), params, guard)?,
                anchor,
            ));
            // ∂z(A_y) - ∂y(A_z) = f_z - a_y + c_y A + c f.
            let lhs = ExprFn::new(&(sys.f.diff(Z) - a.diff(Y)), params, guard)?;
            let cf = ExprFn::new(&c, params, guard)?;
            let fv = ExprFn::new(&sys.f, params, guard)?;
            let worst = sample_max(sys, |z, y| {
                let av = path.value(z, y)?;
                let l = lhs.value(z, y)?;
                let (cv, _, cy) = cf.jet(z, y)?;
                let f = fv.value(z, y)?;
                let terms = [l, cy * av, cv * f];
                Ok(rel(terms.iter().sum(), &terms))
            })?;
            checks.push(Check::new("exactness.a", worst, sys.tol));
            Field::Path(path)
        }
        _ => {
            return Err(Error::Precondition(format!(
                "no construction of A for branch {case}"
            )))
        }
    };
    Ok((field, Some(anchor), checks))
}

/// Scaled residual `|r| / (1 + max |term|)`.
fn rel(r: f64, terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    r.abs() / (1.0 + scale)
}

/// Largest value of a point-wise residual over the admissible sample of
/// the system's domain.
fn sample_max<F>(sys: &OdeSystem, residual: F) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let values = sys.domain.sample(residual)?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// `B_y` from the branch formula and `B_z = A B_y`, with the mandatory
/// comparison against `2 (g - A_z)` and the exactness test of the pair.
pub fn compute_b_partials(
    sys: &OdeSystem,
    state: &ClassifierState,
    case: CaseTag,
    a: &Field,
) -> Result<BPartials> {
    let k = &state.inv;
    let (params, guard) = (&sys.params, sys.domain.guard);
    let (f, g, fy, p, q, r, s, t, py) = (&k.f, &k.g, &k.fy, &k.p, &k.q, &k.r, &k.s, &k.t, &k.py);
    if let Some(a_expr) = a.as_expr() {
        let from_relation = 2 * (g - a_expr.diff(Z));
        let formula = match case {
            CaseTag::Generic => {
                let fy2 = fy.powi(2);
                2 * (2 * p * f - &k.pz) / fy
                    - 2 * py
                        * (2 * p * r * f - 3 * p * &fy2 - 3 * f * py * fy - r * &k.pz + &k.pzy * fy)
                        / (fy * s)
            }
            CaseTag::FyZero => {
                2 * (g * q.powi(2) - 2 * t * f * q + t * &k.ty + q * &k.tz) / q.powi(2)
            }
            CaseTag::SZero => {
                2 * (fy * py * &k.tz
                    - 4 * p * t * fy.powi(2)
                    - 3 * t * f * py * fy
                    - g * py.powi(2) * fy
                    - r * t.powi(2))
                    / (fy * &k.d)
            }
            CaseTag::LienardAutonomous => 2 * g,
            CaseTag::SZeroTZero => Expr::zero(),
            _ => from_relation.clone(),
        };
        let by = simplify(&formula);
        let bz = simplify(&(a_expr * &by));
        let cross = max_residual(&(&formula - &from_relation), &sys.domain, params)?;
        let exact = max_residual(&(by.diff(Z) - bz.diff(Y)), &sys.domain, params)?;
        return Ok(BPartials {
            by: Rate::expr(&by, params, guard)?,
            bz: Rate::expr(&bz, params, guard)?,
            by_expr: Some(by),
            bz_expr: Some(bz),
            checks: vec![
                Check::new("cross_check.b_y", cross.max, sys.tol),
                Check::new("exactness.b", exact.max, sys.tol),
            ],
        });
    }
    if case != CaseTag::DZero {
        // A potential of (f, g) that is not a polynomial leaves B constant.
        let zero = Expr::zero();
        return Ok(BPartials {
            by: Rate::expr(&zero, params, guard)?,
            bz: Rate::expr(&zero, params, guard)?,
            by_expr: Some(zero.clone()),
            bz_expr: Some(zero),
            checks: Vec::new(),
        });
    }
    // B_y = 2 (c A + k2) with A known numerically.
    let (a_coef, c, k2) = transport_coefficients(state);
    let cf = ExprFn::new(&simplify(&c), params, guard)?;
    let k2f = ExprFn::new(&simplify(&k2), params, guard)?;
    let field = a.clone();
    let (cf1, k2f1, field1) = (cf.clone(), k2f.clone(), field.clone());
    let by: Rate = Rate::Fn(Arc::new(move |z, y| {
        Ok(2.0 * (cf1.value(z, y)? * field1.value(z, y)? + k2f1.value(z, y)?))
    }));
    let (by1, field2) = (by.clone(), field.clone());
    let bz: Rate = Rate::Fn(Arc::new(move |z, y| {
        Ok(field2.value(z, y)? * by1.value(z, y)?)
    }));
    // With A_z = a - c A the comparison with 2 (g - A_z) reduces to
    // a + k2 - g, which is free of A.
    let cross = max_residual(&(&a_coef + &k2 - g), &sys.domain, params)?;
    let fv = ExprFn::new(f, params, guard)?;
    let af = ExprFn::new(&a_coef, params, guard)?;
    let exact = sample_max(sys, |z, y| {
        let av = field.value(z, y)?;
        let (cv, cz, cy) = cf.jet(z, y)?;
        let (kv, kz, ky) = k2f.jet(z, y)?;
        let a_z = af.value(z, y)? - cv * av;
        let by = 2.0 * (cv * av + kv);
        let by_z = 2.0 * (cz * av + cv * a_z + kz);
        let f = fv.value(z, y)?;
        let bz_y = f * by + av * 2.0 * (cy * av + cv * f + ky);
        Ok(rel(by_z - bz_y, &[by_z, bz_y]))
    })?;
    Ok(BPartials {
        by,
        bz,
        by_expr: None,
        bz_expr: None,
        checks: vec![
            Check::new("cross_check.b_y", cross.max, sys.tol),
            Check::new("exactness.b", exact, sys.tol),
        ],
    })
}

/// Potential `B` of the partials: a closed form when both are polynomial
/// in `z` and `y`, otherwise a path integral.
pub fn reconstruct_b(sys: &OdeSystem, parts: &BPartials, anchor: Anchor) -> Result<Field> {
    let (params, guard) = (&sys.params, sys.domain.guard);
    if let (Some(by), Some(bz)) = (&parts.by_expr, &parts.bz_expr) {
        let z0 = rational(anchor.z0, "anchor")?;
        let y0 = rational(anchor.y0, "anchor")?;
        let b0 = rational(anchor.value, "anchor value")?;
        if let Some(b) = polynomial_potential(by, bz, &z0, &y0, &b0) {
            return Field::closed(&b, params, guard);
        }
    }
    Ok(Field::Path(Arc::new(PathField::from_partials(
        parts.by.clone(),
        parts.bz.clone(),
        anchor,
    ))))
}

/// Builds `I` for the given branch.
pub fn build_first_integral(
    sys: &OdeSystem,
    state: &ClassifierState,
    case: CaseTag,
    opts: &IntegralOptions,
) -> Result<FirstIntegral> {
    let (a, a_anchor, mut checks) = compute_a(sys, state, case, opts)?;
    let parts = compute_b_partials(sys, state, case, &a)?;
    checks.extend(parts.checks.iter().cloned());
    if !opts.candidate {
        if let Some(bad) = checks.iter().find(|c| !c.pass) {
            return Err(Error::CrossCheck {
                what: bad.id.clone(),
                residual: bad.residual,
            });
        }
    }
    let anchor = default_anchor(sys, opts);
    let b = reconstruct_b(sys, &parts, anchor)?;
    let degenerate = anchor.value == 0.0
        && parts.by_expr.as_ref().is_some_and(Expr::is_zero_const)
        && parts.bz_expr.as_ref().is_some_and(Expr::is_zero_const);
    Ok(FirstIntegral {
        case,
        candidate: opts.candidate,
        a,
        b,
        by_expr: parts.by_expr,
        bz_expr: parts.bz_expr,
        anchor,
        a_anchor,
        degenerate,
        checks,
    })
}

/// Classifies the system and, when a branch applies, builds its integral.
/// With `opts.candidate` an integral is built from the tested branch even
/// when its conditions fail.
pub fn first_integral(
    sys: &OdeSystem,
    opts: &IntegralOptions,
) -> Result<(crate::classify::ConditionReport, Option<FirstIntegral>)> {
    let (report, state) = classify(sys)?;
    let fi = if report.passed() {
        Some(build_first_integral(sys, &state, report.verdict, opts)?)
    } else if opts.candidate {
        Some(build_first_integral(sys, &state, report.branch, opts)?)
    } else {
        None
    };
    Ok((report, fi))
}

/// Residuals of the defining relations `A_y = f`, `A_z + B_y/2 = g`,
/// `B_z = A B_y` and of the direct substitution of `I` into the equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationResiduals {
    pub a_y: f64,
    pub a_z: f64,
    pub b_z: f64,
    /// `dI/dz` along the flow at `y'` in {-1, 0.3, 2}.
    pub substitution: f64,
    pub samples: usize,
}

impl RelationResiduals {
    pub fn max_relation(&self) -> f64 {
        self.a_y.max(self.a_z).max(self.b_z)
    }

    pub fn relations_pass(&self) -> bool {
        self.max_relation() <= RELATION_TOL
    }

    pub fn substitution_pass(&self) -> bool {
        self.substitution <= RELATION_TOL
    }
}

/// Slopes at which the substitution residual is evaluated.
pub const ORACLE_SLOPES: [f64; 3] = [-1.0, 0.3, 2.0];

/// Samples the defining relations and the total derivative of `I`.
pub fn relation_residuals(fi: &FirstIntegral, sys: &OdeSystem) -> Result<RelationResiduals> {
    let (params, guard) = (&sys.params, sys.domain.guard);
    let ff = ExprFn::new(&sys.f, params, guard)?;
    let gf = ExprFn::new(&sys.g, params, guard)?;
    let rows = sys.domain.sample(|z, y| -> Result<[f64; 4]> {
        let (a, az, ay) = fi.a.jet(z, y)?;
        let (_, bz, by) = fi.b.jet(z, y)?;
        let f = ff.value(z, y)?;
        let g = gf.value(z, y)?;
        let r1 = rel(ay - f, &[ay, f]);
        let r2 = rel(az + by / 2.0 - g, &[az, by / 2.0, g]);
        let r3 = rel(bz - a * by, &[bz, a * by]);
        // dI/dz = I_z + I_y y' + I_y' y'' with y'' = -f y' - g.
        let mut r4 = 0.0f64;
        for yp in ORACLE_SLOPES {
            let w = yp + a;
            let i_z = 2.0 * w * az + bz;
            let i_y = 2.0 * w * ay + by;
            let i_yp = 2.0 * w;
            let ypp = -f * yp - g;
            let terms = [i_z, i_y * yp, i_yp * ypp];
            r4 = r4.max(rel(terms.iter().sum(), &terms));
        }
        Ok([r1, r2, r3, r4])
    })?;
    let mut out = RelationResiduals {
        a_y: 0.0,
        a_z: 0.0,
        b_z: 0.0,
        substitution: 0.0,
        samples: rows.len(),
    };
    for r in rows {
        out.a_y = out.a_y.max(r[0]);
        out.a_z = out.a_z.max(r[1]);
        out.b_z = out.b_z.max(r[2]);
        out.substitution = out.substitution.max(r[3]);
    }
    Ok(out)
}

/// Largest relative gap between the two axis-aligned path orderings of a
/// path-integrated `B` at the sample points, or `None` for closed forms.
pub fn path_consistency(fi: &FirstIntegral, sys: &OdeSystem, points: usize) -> Result<Option<f64>> {
    let Some(p) = fi.b.as_path() else {
        return Ok(None);
    };
    let dom = sys.domain.clone().with_count(points);
    let worst = dom
        .sample(|z, y| -> Result<f64> {
            let v = p.value(z, y)?;
            let w = p.value_other_path(z, y)?;
            Ok((v - w).abs() / (1.0 + v.abs()))
        })?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Some(worst))
}

fn require_autonomous_in_y(e: &Expr, what: &str) -> Result<()> {
    if e.depends_on(Z) {
        Err(Error::InvalidInput(format!("{what} must not depend on z")))
    } else {
        Ok(())
    }
}

fn constant(x: f64, what: &str) -> Result<Expr> {
    Expr::from_f64(x).ok_or_else(|| Error::InvalidInput(format!("{what} must be finite")))
}

/// The restoring term `g = 1 / (κ ∫_0^y f + μ)` that makes `(f, g)` carry a
/// Lax pair with a `z`-free `A`.
pub fn lienard_g_from_f(f: &Expr, kappa: f64, mu: f64) -> Result<Expr> {
    require_autonomous_in_y(f, "f")?;
    if kappa == 0.0 {
        return Err(Error::Construction("kappa must be nonzero".into()));
    }
    let anti = crate::expr::antiderivative_in_y(f).ok_or_else(|| {
        Error::Construction(format!(
            "f = {f} is not a polynomial in y, so its antiderivative is not formed term by term"
        ))
    })?;
    let den = constant(kappa, "kappa")? * anti + constant(mu, "mu")?;
    if den.is_zero_const() {
        return Err(Error::Construction(
            "the constructed g has a zero denominator".into(),
        ));
    }
    Ok(simplify(&(Expr::one() / den)))
}

/// The friction `f = -ν g_y / g^2` that makes `(f, g)` carry a Lax pair
/// with a `z`-free `A`.
pub fn lienard_f_from_g(g: &Expr, nu: f64) -> Result<Expr> {
    require_autonomous_in_y(g, "g")?;
    if nu == 0.0 {
        return Err(Error::Construction("nu must be nonzero".into()));
    }
    if g.is_zero_const() {
        return Err(Error::Construction("g must not vanish".into()));
    }
    Ok(simplify(&(-(constant(nu, "nu")? * g.diff(Y) / g.powi(2)))))
}
