//! End-to-end analysis of one system and its serializable report.
//!
//! [`analyze`] runs classification, construction of `A` and `B`, the Lax
//! pair, integration and every residual check, and collects the outcome in
//! a [`Report`] that carries its own inputs so it can be recomputed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::{CaseTag, ConditionResidual, Flags, OdeSystem};
use crate::error::{Error, Result};
use crate::expr::{to_latex, ParamBinding, SampleDomain};
use crate::field::Anchor;
use crate::fixtures::Fixture;
use crate::integral::{
    first_integral, relation_residuals, Check, FirstIntegral, IntegralOptions, RelationResiduals,
};
use crate::lax::{
    alternative_m_residual, build_lax, isospectrality, lax_residual, lax_residual_fd,
    trace_identities, FdCheck, Isospectrality, LaxPair, TraceIdentities,
};
use crate::odesolve::{
    conservation_drift, integrate, to_csv, Drift, InitialCondition, Tolerances, Trajectory,
};
use crate::DEFAULT_SEED;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest accepted Frobenius residual of the Lax equation.
pub const LAX_TOL: f64 = 1e-6;
/// Largest accepted finite-difference Lax residual.
pub const LAX_FD_TOL: f64 = 1e-5;
/// Largest accepted relative conservation drift.
pub const DRIFT_TOL: f64 = 1e-7;
/// Largest accepted relative change of `tr(L^2)` and of the eigenvalues.
pub const ISOSPECTRAL_TOL: f64 = 1e-6;
/// Bound on `|tr L|` and odd traces.
pub const TRACE_TOL: f64 = 1e-12;
/// Bound on the relative gap between `tr(L^2)/2` and `I`.
pub const HALF_TRACE_TOL: f64 = 1e-9;
/// Random points used for the trace identities.
pub const TRACE_POINTS: usize = 50;

/// Optional overrides of the sampling domain.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

fn default_span() -> f64 {
    5.0
}

fn default_tolerances() -> Tolerances {
    Tolerances::default()
}

/// Everything needed to analyze one system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub f: String,
    pub g: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub domain: DomainOverrides,
    /// Initial point `(z0, y0, y'0)` of the verification run. Without it
    /// only the point-wise checks run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ic: Option<(f64, f64, f64)>,
    #[serde(default = "default_span")]
    pub span: f64,
    #[serde(default = "default_tolerances")]
    pub tolerances: Tolerances,
    /// Point and value fixing the additive constant of `B`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Anchor>,
    /// Value of `A` at the anchor when `A` is only known by its partials.
    #[serde(default)]
    pub a_value: f64,
    /// Build `A` and `B` from the selected formulas even when the
    /// compatibility conditions fail.
    #[serde(default)]
    pub candidate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SystemSpec {
    pub fn new(f: &str, g: &str) -> SystemSpec {
        SystemSpec {
            name: None,
            f: f.to_string(),
            g: g.to_string(),
            params: BTreeMap::new(),
            domain: DomainOverrides::default(),
            ic: None,
            span: default_span(),
            tolerances: Tolerances::default(),
            anchor: None,
            a_value: 0.0,
            candidate: false,
            seed: None,
        }
    }

    /// The spec of a corpus system.
    pub fn from_fixture(fx: &Fixture) -> SystemSpec {
        let dom = fx.domain();
        SystemSpec {
            name: Some(fx.name.to_string()),
            params: fx.params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            domain: DomainOverrides {
                z: Some(dom.z),
                y: Some(dom.y),
                ..DomainOverrides::default()
            },
            ic: Some(fx.ic),
            span: fx.span,
            anchor: Some(fx.anchor()),
            ..SystemSpec::new(fx.f, fx.g)
        }
    }

    /// The perturbed negative control of a corpus system, analyzed in
    /// candidate mode and anchored at its initial point.
    pub fn control_from_fixture(fx: &Fixture) -> SystemSpec {
        SystemSpec {
            name: Some(format!("{}-control", fx.name)),
            f: fx.control.0.to_string(),
            g: fx.control.1.to_string(),
            anchor: Some(fx.control_anchor()),
            candidate: true,
            ..SystemSpec::from_fixture(fx)
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn domain(&self) -> SampleDomain {
        let mut dom = SampleDomain::default().with_seed(self.seed());
        let o = &self.domain;
        if let Some(z) = o.z {
            dom.z = z;
        }
        if let Some(y) = o.y {
            dom.y = y;
        }
        if let Some(g) = o.guard {
            dom.guard = g;
        }
        if let Some(c) = o.count {
            dom.count = c;
        }
        dom
    }

    pub fn param_binding(&self) -> ParamBinding {
        ParamBinding(self.params.clone())
    }

    pub fn system(&self) -> Result<OdeSystem> {
        let dom = self.domain();
        dom.validate()?;
        OdeSystem::parse(&self.f, &self.g, self.param_binding(), dom)
    }

    pub fn integral_options(&self) -> IntegralOptions {
        IntegralOptions {
            anchor: self.anchor,
            a_value: self.a_value,
            candidate: self.candidate,
        }
    }

    pub fn initial_condition(&self) -> Option<InitialCondition> {
        self.ic.map(|(z, y, yp)| InitialCondition::new(z, y, yp))
    }
}

/// The constructed integral and Lax pair as strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub case: CaseTag,
    pub candidate: bool,
    pub degenerate: bool,
    /// Closed form of `A`, or a description of the path integral.
    pub a: String,
    pub a_closed: bool,
    pub b: String,
    pub b_closed: bool,
    pub b_y: Option<String>,
    pub b_z: Option<String>,
    pub u: Option<String>,
    pub m: Option<String>,
    pub anchor: Anchor,
    pub checks: Vec<Check>,
}

/// Summary of the Lax-equation residual along the trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaxSummary {
    pub max: f64,
    pub at_z: f64,
    pub evaluated: usize,
    pub complex_samples: usize,
    pub skipped: usize,
    pub finite_difference: FdCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub samples: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub end_z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halted: Option<String>,
}

/// The four verdicts that must agree when an integral exists, plus the
/// secondary identities. `None` means the check did not run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub conditions: bool,
    pub relations: Option<bool>,
    pub lax: Option<bool>,
    pub drift: Option<bool>,
    pub isospectral: Option<bool>,
    pub traces: Option<bool>,
    pub finite_difference: Option<bool>,
    pub alternative_m: Option<bool>,
}

impl Verdicts {
    fn all(&self) -> bool {
        self.conditions
            && [
                self.relations,
                self.lax,
                self.drift,
                self.isospectral,
                self.traces,
                self.finite_difference,
                self.alternative_m,
            ]
            .iter()
            .all(|v| v.unwrap_or(true))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub spec: SystemSpec,
    /// Branch selected from the degeneracy flags.
    pub branch: CaseTag,
    /// `branch` when its conditions hold, otherwise `NoQuadraticIntegral`.
    pub case: CaseTag,
    pub flags: Flags,
    pub conditions: Vec<ConditionResidual>,
    pub construction: Option<Construction>,
    pub relations: Option<RelationResiduals>,
    pub lax: Option<LaxSummary>,
    pub alternative_m: Option<f64>,
    pub traces: Option<TraceIdentities>,
    pub trajectory: Option<TrajectorySummary>,
    pub drift: Option<Drift>,
    pub isospectrality: Option<Isospectrality>,
    pub verdicts: Verdicts,
    /// Every check that ran passed and an integral exists.
    pub pass: bool,
}

impl Report {
    pub fn max_condition_residual(&self) -> f64 {
        self.conditions
            .iter()
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }

    /// `0` when everything passes, `2` for a clean negative verdict and `70`
    /// when an integral was claimed but a downstream check disagrees.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else if self.case == CaseTag::NoQuadraticIntegral {
            2
        } else {
            70
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// A full analysis together with the objects it produced.
pub struct Analysis {
    pub report: Report,
    pub system: OdeSystem,
    pub integral: Option<FirstIntegral>,
    pub lax: Option<LaxPair>,
    pub trajectory: Option<Trajectory>,
}

fn describe_field(closed: Option<String>, name: &str, anchor: Option<Anchor>) -> (String, bool) {
    match (closed, anchor) {
        (Some(s), _) => (s, true),
        (None, Some(a)) => (
            format!(
                "{name}(z,y): path integral of its partials from ({}, {}) with value {}",
                a.z0, a.y0, a.value
            ),
            false,
        ),
        (None, None) => (format!("{name}(z,y): path integral of its partials"), false),
    }
}

fn construction(fi: &FirstIntegral, lp: &LaxPair) -> Construction {
    let (a, a_closed) = describe_field(fi.a.as_expr().map(|e| e.to_string()), "A", fi.a_anchor);
    let (b, b_closed) = describe_field(fi.b.as_expr().map(|e| e.to_string()), "B", Some(fi.anchor));
    Construction {
        case: fi.case,
        candidate: fi.candidate,
        degenerate: fi.degenerate,
        a,
        a_closed,
        b,
        b_closed,
        b_y: fi.by_expr.as_ref().map(|e| e.to_string()),
        b_z: fi.bz_expr.as_ref().map(|e| e.to_string()),
        u: lp.u_expr.as_ref().map(|e| e.to_string()),
        m: lp.m_expr.as_ref().map(|e| e.to_string()),
        anchor: fi.anchor,
        checks: fi.checks.clone(),
    }
}

/// Runs the whole pipeline on `spec`.
pub fn analyze_full(spec: &SystemSpec) -> Result<Analysis> {
    let sys = spec.system()?;
    let (cond, fi) = first_integral(&sys, &spec.integral_options())?;
    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        seed: sys.domain.seed,
        spec: spec.clone(),
        branch: cond.branch,
        case: cond.verdict,
        flags: cond.flags,
        conditions: cond.conditions.clone(),
        construction: None,
        relations: None,
        lax: None,
        alternative_m: None,
        traces: None,
        trajectory: None,
        drift: None,
        isospectrality: None,
        verdicts: Verdicts {
            conditions: cond.passed(),
            ..Verdicts::default()
        },
        pass: false,
    };
    let Some(fi) = fi else {
        return Ok(Analysis {
            report,
            system: sys,
            integral: None,
            lax: None,
            trajectory: None,
        });
    };
    let v = &mut report.verdicts;

    let rel = relation_residuals(&fi, &sys)?;
    v.relations = Some(rel.relations_pass() && rel.substitution_pass());
    report.relations = Some(rel);

    let lp = build_lax(&fi, &sys)?;
    report.construction = Some(construction(&fi, &lp));
    let traces = trace_identities(&lp, &sys, TRACE_POINTS)?;
    v.traces = Some(
        traces.trace_l <= TRACE_TOL
            && traces.odd_traces <= TRACE_TOL
            && traces.half_trace_vs_integral <= HALF_TRACE_TOL
            && traces.m_symmetric_part == 0.0,
    );
    report.traces = Some(traces);
    report.alternative_m = alternative_m_residual(&lp, &sys)?;
    v.alternative_m = report.alternative_m.map(|r| r <= LAX_TOL);

    let mut trajectory = None;
    if let Some(ic) = spec.initial_condition() {
        let traj = integrate(&sys, ic, spec.span, spec.tolerances)?;
        let res = lax_residual(&lp, &sys, &traj)?;
        let fd = lax_residual_fd(&lp, &sys, &traj)?;
        v.lax = Some(res.max <= LAX_TOL && !res.per_sample.is_empty());
        v.finite_difference = Some(fd.max <= LAX_FD_TOL);
        report.lax = Some(LaxSummary {
            max: res.max,
            at_z: res.at_z,
            evaluated: res.per_sample.len(),
            complex_samples: res.complex_samples,
            skipped: res.skipped.len(),
            finite_difference: fd,
        });
        let drift = conservation_drift(&fi, &traj)?;
        v.drift = Some(drift.relative <= DRIFT_TOL);
        report.drift = Some(drift);
        let iso = isospectrality(&lp, &traj)?;
        v.isospectral =
            Some(iso.trace_drift <= ISOSPECTRAL_TOL && iso.eigenvalue_drift <= ISOSPECTRAL_TOL);
        report.isospectrality = Some(iso);
        report.trajectory = Some(TrajectorySummary {
            samples: traj.samples.len(),
            accepted: traj.accepted,
            rejected: traj.rejected,
            end_z: traj.last().z,
            halted: traj
                .halted
                .as_ref()
                .map(|h| format!("z={}: {}", h.z, h.reason)),
        });
        trajectory = Some(traj);
    }
    report.pass = report.case != CaseTag::NoQuadraticIntegral && report.verdicts.all();
    Ok(Analysis {
        report,
        system: sys,
        integral: Some(fi),
        lax: Some(lp),
        trajectory,
    })
}

pub fn analyze(spec: &SystemSpec) -> Result<Report> {
    Ok(analyze_full(spec)?.report)
}

/// Agreement of a corpus report with the published closed forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureComparison {
    pub name: String,
    pub expected_case: CaseTag,
    pub case_matches: bool,
    /// `max |A - A_published| / (1 + |A_published|)`.
    pub a_residual: f64,
    /// The same for `B` after removing the constant offset at the anchor.
    pub b_residual: f64,
    pub points: usize,
}

/// Compares the constructed `A` and `B` of a corpus system with the
/// published forms at `points` sampled points.
pub fn compare_with_fixture(
    fx: &Fixture,
    an: &Analysis,
    points: usize,
) -> Result<FixtureComparison> {
    let fi = an
        .integral
        .as_ref()
        .ok_or_else(|| Error::Construction(format!("{}: no integral was built", fx.name)))?;
    let sys = &an.system;
    let a_pub =
        crate::expr::ExprFn::new(&crate::expr::parse(fx.a)?, &sys.params, sys.domain.guard)?;
    let b_pub =
        crate::expr::ExprFn::new(&crate::expr::parse(fx.b)?, &sys.params, sys.domain.guard)?;
    let offset = b_pub.value(fx.ic.0, fx.ic.1)? - fi.b.value(fx.ic.0, fx.ic.1)?;
    let rows = sys
        .domain
        .clone()
        .with_count(points)
        .sample(|z, y| -> Result<(f64, f64)> {
            let (ap, bp) = (a_pub.value(z, y)?, b_pub.value(z, y)?);
            let da = (fi.a.value(z, y)? - ap).abs() / (1.0 + ap.abs());
            let db = (fi.b.value(z, y)? + offset - bp).abs() / (1.0 + bp.abs());
            Ok((da, db))
        })?;
    Ok(FixtureComparison {
        name: fx.name.to_string(),
        expected_case: fx.expected,
        case_matches: an.report.case == fx.expected,
        a_residual: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        b_residual: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        points: rows.len(),
    })
}

/// Publication-style rendering of `L`, `M` and `I`.
pub fn to_latex_report(an: &Analysis) -> String {
    let mut out = String::new();
    let r = &an.report;
    let _ = writeln!(out, "% case: {}", r.case);
    let (Some(fi), Some(lp)) = (&an.integral, &an.lax) else {
        let _ = writeln!(out, "% no quadratic first integral");
        return out;
    };
    let a =
        fi.a.as_expr()
            .map(to_latex)
            .unwrap_or_else(|| "A(z,y)".into());
    let b =
        fi.b.as_expr()
            .map(to_latex)
            .unwrap_or_else(|| "B(z,y)".into());
    let u = match &lp.u_expr {
        Some(u) => to_latex(u),
        None => format!("\\sqrt{{{b}}}"),
    };
    let m = match &lp.m_expr {
        Some(m) => to_latex(m),
        None => format!("\\frac{{B_y}}{{4 {u}}}"),
    };
    let w = format!("y' + {a}");
    let _ = writeln!(
        out,
        "L = \\begin{{pmatrix}} {w} & {u} \\\\ {u} & -\\left({w}\\right) \\end{{pmatrix}},"
    );
    let _ = writeln!(
        out,
        "\\quad M = \\begin{{pmatrix}} 0 & {m} \\\\ -\\left({m}\\right) & 0 \\end{{pmatrix}},"
    );
    let _ = writeln!(out, "\\quad I = \\left({w}\\right)^2 + {b}");
    out
}

/// Trajectory table with the integral column.
pub fn to_csv_report(an: &Analysis) -> Result<String> {
    let traj = an
        .trajectory
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("the spec has no initial condition".into()))?;
    Ok(to_csv(traj, an.integral.as_ref()))
}

/// Which coefficient of a Liénard pair is given to [`construct_spec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructMode {
    /// `f` is given and `g = 1 / (κ ∫ f + μ)` is built.
    GFromF,
    /// `g` is given and `f = -ν g_y / g^2` is built.
    FFromG,
}

/// Constants of the Liénard constructions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructConstants {
    pub kappa: f64,
    pub mu: f64,
    pub nu: f64,
}

impl Default for ConstructConstants {
    fn default() -> Self {
        ConstructConstants {
            kappa: 1.0,
            mu: 1.0,
            nu: 1.0,
        }
    }
}

/// A complete spec for the Liénard pair built from one coefficient.
pub fn construct_spec(
    mode: ConstructMode,
    expr: &str,
    k: ConstructConstants,
    params: BTreeMap<String, f64>,
) -> Result<SystemSpec> {
    let e = crate::expr::parse(expr)?;
    let (f, g) = match mode {
        ConstructMode::GFromF => (
            e.clone(),
            crate::integral::lienard_g_from_f(&e, k.kappa, k.mu)?,
        ),
        ConstructMode::FFromG => (crate::integral::lienard_f_from_g(&e, k.nu)?, e),
    };
    let mut spec = SystemSpec::new(&f.to_string(), &g.to_string());
    spec.params = params;
    // Unbound parameters and degenerate pairs fail here rather than in a
    // later analysis.
    spec.system()?;
    Ok(spec)
}
