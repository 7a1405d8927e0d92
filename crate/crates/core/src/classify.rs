//! Decides which branch of the quadratic-integral theory applies to
//! `y'' + f(z,y) y' + g(z,y) = 0` and whether its compatibility conditions hold.
//!
//! A quadratic integral `(y' + A)^2 + B` exists exactly when
//! `A_y = f`, `A_z + B_y/2 = g` and `B_z = A B_y`. Eliminating `A` and `B`
//! leaves differential conditions on `f` and `g` alone, expressed through
//! the invariants `P, Q, R, S, T, D` below. Which eliminations are legal
//! depends on which invariants vanish, so the branch is chosen first and
//! then only that branch's conditions are tested.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{
    is_identically_zero, max_residual, parse, Expr, ParamBinding, SampleDomain, Var,
};

use Var::{Y, Z};

/// Tolerance for sampled identity tests.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// The equation `y'' + f y' + g = 0` with parameter values and the
/// rectangle on which identities are sampled.
#[derive(Clone, Debug)]
pub struct OdeSystem {
    pub f: Expr,
    pub g: Expr,
    pub params: ParamBinding,
    pub domain: SampleDomain,
    pub tol: f64,
}

impl OdeSystem {
    /// Validates that `f` and `g` are not identically zero and that the
    /// equation is not linear in `y`.
    pub fn new(f: Expr, g: Expr, params: ParamBinding, domain: SampleDomain) -> Result<Self> {
        let sys = OdeSystem {
            f,
            g,
            params,
            domain,
            tol: DEFAULT_ZERO_TOL,
        };
        for p in sys.f.params().into_iter().chain(sys.g.params()) {
            if sys.params.get(&p).is_none() {
                return Err(Error::InvalidInput(format!("parameter '{p}' has no value")));
            }
        }
        if sys.zero(&sys.f)? {
            return Err(Error::InvalidSystem("f vanishes identically".into()));
        }
        if sys.zero(&sys.g)? {
            return Err(Error::InvalidSystem("g vanishes identically".into()));
        }
        if sys.zero(&sys.f.diff(Y))? && sys.zero(&sys.g.d(&[Y, Y]))? {
            return Err(Error::InvalidSystem(
                "the equation is linear in y (f_y and g_yy vanish)".into(),
            ));
        }
        Ok(sys)
    }

    pub fn parse(f: &str, g: &str, params: ParamBinding, domain: SampleDomain) -> Result<Self> {
        OdeSystem::new(parse(f)?, parse(g)?, params, domain)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn zero(&self, e: &Expr) -> Result<bool> {
        Ok(is_identically_zero(
            e,
            &self.domain,
            &self.params,
            self.tol,
        )?)
    }
}

/// Branch of the theory, or the verdict that no quadratic integral exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    Generic,
    FyZero,
    SZero,
    SZeroTZero,
    DZero,
    PyZero,
    LienardAutonomous,
    NoQuadraticIntegral,
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Symbolic invariants of the pair `(f, g)` and the derivatives the
/// compatibility conditions use.
#[derive(Clone, Debug)]
pub struct Invariants {
    pub f: Expr,
    pub g: Expr,
    pub fy: Expr,
    pub fz: Expr,
    pub gy: Expr,
    pub gz: Expr,
    pub fzz: Expr,
    pub gyz: Expr,
    pub p: Expr,
    pub q: Expr,
    pub r: Expr,
    pub s: Expr,
    pub t: Expr,
    pub d: Expr,
    pub py: Expr,
    pub pz: Expr,
    pub pzy: Expr,
    pub pzz: Expr,
    pub pyy: Expr,
    pub sz: Expr,
    pub sy: Expr,
    pub ry: Expr,
    pub rz: Expr,
    pub qy: Expr,
    pub qz: Expr,
    pub qyy: Expr,
    pub qzy: Expr,
    pub tz: Expr,
    pub ty: Expr,
    pub tzz: Expr,
}

impl Invariants {
    pub fn new(f: &Expr, g: &Expr) -> Invariants {
        let fy = f.diff(Y);
        let fz = f.diff(Z);
        let gy = g.diff(Y);
        let gz = g.diff(Z);
        let fzz = fz.diff(Z);
        let gyz = gy.diff(Z);
        let p = &fz - &gy;
        let q = gy.diff(Y);
        let r = fy.diff(Y);
        let fzy = fz.diff(Y);
        let s = &q.diff(Y) * &fy + &r * &fzy - &r * &q - &fzy.diff(Y) * &fy;
        let t = &fzz - &gyz - 2 * f * &fz + 2 * f * &gy;
        let py = p.diff(Y);
        let pz = p.diff(Z);
        let d = 4 * &p * fy.powi(2) + 2 * f * &py * &fy - &q * &py + &r * &t - 2 * py.powi(2);
        Invariants {
            f: f.clone(),
            g: g.clone(),
            pzy: pz.diff(Y),
            pzz: pz.diff(Z),
            pyy: py.diff(Y),
            sz: s.diff(Z),
            sy: s.diff(Y),
            ry: r.diff(Y),
            rz: r.diff(Z),
            qy: q.diff(Y),
            qz: q.diff(Z),
            qyy: q.d(&[Y, Y]),
            qzy: q.d(&[Z, Y]),
            tz: t.diff(Z),
            ty: t.diff(Y),
            tzz: t.d(&[Z, Z]),
            fy,
            fz,
            gy,
            gz,
            fzz,
            gyz,
            p,
            q,
            r,
            s,
            t,
            d,
            py,
            pz,
        }
    }
}

/// Which invariants vanish identically on the sampling domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub autonomous: bool,
    pub fy_zero: bool,
    pub s_zero: bool,
    pub t_zero: bool,
    pub d_zero: bool,
    pub py_zero: bool,
}

#[derive(Clone, Debug)]
pub struct ClassifierState {
    pub inv: Invariants,
    pub flags: Flags,
}

/// Computes the invariants and their vanishing flags.
pub fn compute_invariants(sys: &OdeSystem) -> Result<ClassifierState> {
    let inv = Invariants::new(&sys.f, &sys.g);
    let flags = Flags {
        autonomous: sys.zero(&inv.fz)? && sys.zero(&inv.gz)?,
        fy_zero: sys.zero(&inv.fy)?,
        s_zero: sys.zero(&inv.s)?,
        t_zero: sys.zero(&inv.t)?,
        d_zero: sys.zero(&inv.d)?,
        py_zero: sys.zero(&inv.py)?,
    };
    Ok(ClassifierState { inv, flags })
}

/// Branch selected by the vanishing pattern of the invariants.
pub fn select_branch(flags: &Flags) -> CaseTag {
    if flags.autonomous {
        CaseTag::LienardAutonomous
    } else if flags.fy_zero {
        CaseTag::FyZero
    } else if !flags.s_zero {
        CaseTag::Generic
    } else if flags.t_zero {
        CaseTag::SZeroTZero
    } else if flags.d_zero {
        CaseTag::DZero
    } else if flags.py_zero {
        CaseTag::PyZero
    } else {
        CaseTag::SZero
    }
}

/// Named compatibility conditions of a branch; each must vanish identically.
pub fn case_conditions(k: &Invariants, case: CaseTag) -> Vec<(&'static str, Expr)> {
    let Invariants {
        f,
        g,
        fy,
        fz,
        gy,
        gz,
        fzz,
        gyz,
        p,
        q,
        r,
        s,
        t,
        py,
        pz,
        pzy,
        pzz,
        pyy,
        sz,
        sy,
        ry,
        rz,
        qy,
        qz,
        qyy,
        qzy,
        tz,
        ty,
        tzz,
        ..
    } = k;
    let fy2 = fy.powi(2);
    let fy3 = fy.powi(3);
    let fy4 = fy.powi(4);
    let fy5 = fy.powi(5);
    let py2 = py.powi(2);
    let t2 = t.powi(2);
    match case {
        CaseTag::Generic => {
            let c1 = (f * py * fy - p * &fy2 + q * py + 2 * &py2 - fy * pzy)
                * (2 * p * r * f - 3 * p * &fy2 - 3 * f * py * fy - r * pz + fy * pzy)
                - (2 * p * f.powi(2) * fy - 2 * p.powi(2) * fy + 2 * p * q * f + 4 * p * f * py
                    - 2 * p * fy * gy
                    - 3 * f * pz * fy
                    - g * py * fy
                    - q * pz
                    - 2 * pz * py
                    + fy * pzz)
                    * s;
            let s2 = s.powi(2);
            let c2 = &s2 * py + (4 * f * fy + q) * &s2 - s * sz * fy
                + fy * (2 * p * f - pz) * ry * s
                - r * &py2 * s
                + (fy * rz - 4 * r * f * fy - 6 * &fy3 - q * r) * py * s
                - fy * r * (4 * p * fy - pzy) * s
                + 3 * sy * &fy2 * f * py
                - sy * fy * (2 * p * r * f - 3 * p * &fy2 - r * pz + pzy * fy);
            vec![("generic.1", c1), ("generic.2", c2)]
        }
        CaseTag::FyZero => {
            let c1 = 2 * q * qz + 2 * t * qy - 6 * q.powi(2) * f;
            let c2 = (f * g - gz) * q.powi(5)
                + 3 * qy * t * (3 * t * f - tz) * q.powi(2)
                + (4 * t * fz - 12 * t * f.powi(2) - t * gy + 7 * f * tz - tzz) * q.powi(4)
                + qyy * t.powi(3) * q
                - 3 * qy.powi(2) * t.powi(3);
            vec![("fy0.1", c1), ("fy0.2", c2)]
        }
        CaseTag::SZero => {
            let c1 = r * py - fy * pyy;
            let c2 = p * &fy2 + f * py * fy + r * t - fy * ty;
            let c3 = (qy * py - r * f * py - t * ry) * fy
                - 6 * &fy3 * py
                - r * &fy2 * p
                - r * (q * py - r * t);
            let ac = r * fy * q * py * tz
                - qy * fy * q * t * py
                - r * qz * fy * t * py
                - &fy2 * t * (3 * f.powi(2) + 2 * p + gy) * r * py
                + r * &fy2 * f * py * tz
                + 2 * qy * &fy2 * f * t * py
                - 4 * r * &fy2 * q * t * p
                - qy * &fy2 * py * tz
                - r.powi(2) * fy * f * &t2
                + r * &fy3 * p * tz
                + r * q.powi(2) * t * py
                + r * q * t * &py2
                - qy * fy * t * &py2
                - &fy3 * t * (5 * p * f + 7 * t) * r
                + 3 * r * qy * fy * &t2
                + 2 * qy * &fy3 * t * p
                - 12 * &fy3 * q * t * py
                - 18 * &fy4 * f * t * py
                + &fy2 * t * qzy * py
                + 6 * &fy4 * py * tz
                - 2 * r.powi(2) * q * &t2
                - 6 * &fy3 * t * &py2
                - &fy2 * qyy * &t2
                - 18 * &fy5 * t * p
                - 3 * r * fy * q * f * t * py;
            let ac1 = 28 * &fy5 * g * p.powi(2)
                - 2 * &py2 * (9 * p * t - 9 * t * f.powi(2) + 3 * t * gy + gz * py) * &fy2
                - 4 * tzz * &fy4 * p
                + 2 * py
                    * (2 * f.powi(2) * g * py + 18 * p * t * f - 6 * p * g * py + f * py * gz
                        - g * py * gy
                        - 4 * &t2
                        - 3 * t * f.powi(3))
                    * &fy3
                - (15 * p * t * f + 12 * p * g * py + 4 * &t2) * &fy3 * q
                + r * &fy2 * tz.powi(2)
                + (18 * p * f + 4 * t) * &fy4 * tz
                + r * q.powi(2) * &t2
                + 2 * tzz * &fy2 * &py2
                - 5 * r * fy * t * py * tz
                + 15 * r * &fy3 * g * t * p
                - 2 * &fy2 * q * f * py * tz
                - 2 * r * fy * q * t * tz
                - 2 * tzz * &fy3 * f * py
                + 2 * r.powi(2) * fy * g * &t2
                + t * py * (15 * t * f - g * py) * fy * r
                - 12 * &fy2 * f * &py2 * tz
                + 2 * py * (4 * f.powi(2) - p + gy) * &fy3 * tz
                + 4 * qz * &fy3 * t * p
                + 5 * &fy3 * q * p * tz
                - 5 * &fy2 * q.powi(2) * t * p
                - 2 * qy * fy * &t2 * py
                + 2 * r * q * &t2 * py
                - py * (3 * t * f.powi(2) + 4 * f * g * py + 19 * p * t + 3 * t * gy + gz * py)
                    * &fy2
                    * q
                - t * (t * f + g * py) * &fy2 * qy
                - tzz * r * &fy2 * t
                + qy * &fy2 * t * tz
                - qy * fy * q * &t2
                + r * qz * fy * &t2
                + py * (3 * t * f + g * py) * qz * &fy2
                - r * fy * q * g * t * py
                + t * (7 * f * g * py - 2 * t * f.powi(2) + 23 * p * t + t * gy + gz * py)
                    * &fy2
                    * r
                + (2 * t * f - g * py) * &fy2 * r * tz
                + tzz * &fy2 * q * py
                - qz * &fy2 * py * tz
                + 3 * r.powi(2) * t.powi(3)
                + (20 * p * f * g * py - 14 * p * t * f.powi(2)
                    + 44 * p.powi(2) * t
                    + 4 * p * t * gy
                    + 4 * p * py * gz
                    - 4 * &t2 * f
                    - 4 * t * g * py)
                    * &fy4;
            vec![
                ("s0.1", c1),
                ("s0.2", c2),
                ("s0.3", c3),
                ("s0.4", ac),
                ("s0.5", ac1),
            ]
        }
        CaseTag::SZeroTZero => vec![("st0.1", fz - gy)],
        CaseTag::DZero => {
            let c1 = r * t + 4 * &fy2 * p - 2 * &py2 + (2 * f * fy - q) * py;
            let c2 = r * py - fy * pyy;
            let c3 = fy * (q * py - 4 * p * &fy2 - 2 * f * py * fy + 2 * &py2) * ry
                - r * (2 * r * &py2 - 5 * p * r * &fy2 - 3 * r * f * py * fy - 6 * py * &fy3
                    + qy * py * fy);
            let c4 = g * fy * r.powi(2) * py
                + 2 * r * &fy3 * f * p
                + (5 * p * q + 2 * p * py + 2 * gy * py) * r * &fy2
                - 8 * &fy4 * f * py
                + py * (2 * q * f - 2 * f * py - qz) * r * fy
                - &py2 * (q + 2 * py) * r
                - 16 * &fy5 * p
                + (4 * q * py - 4 * p * qy + 8 * &py2) * &fy3
                - 2 * qy * &fy2 * f * py
                + qy * py * (q + 2 * py) * fy;
            vec![("d0.1", c1), ("d0.2", c2), ("d0.3", c3), ("d0.4", c4)]
        }
        CaseTag::PyZero => {
            let c2 = (2 * f * gy - 2 * f * fz + fzz - gyz) * r + 3 * (fz - gy) * &fy2;
            let c3 = g * r.powi(3) + (3 * fy * gy + 3 * f * q + 3 * qz) * r.powi(2)
                - (27 * q * &fy2 + 3 * f * fy * qy + 3 * fy * qzy + 6 * q * qy) * r
                + 6 * fy * qy * (3 * &fy2 + qy);
            let c4 = 4 * r.powi(2) - 3 * fy * ry;
            let c5 = 3 * &fy2 * qyy + 4 * q * r.powi(2) - 8 * r * fy * qy;
            vec![
                ("py0.1", py.clone()),
                ("py0.2", c2),
                ("py0.3", c3),
                ("py0.4", c4),
                ("py0.5", c5),
            ]
        }
        CaseTag::LienardAutonomous => {
            vec![("lienard.1", f * g * q - gy * (2 * f * gy + fy * g))]
        }
        CaseTag::NoQuadraticIntegral => Vec::new(),
    }
}

/// Residual of one compatibility condition over the sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResidual {
    pub id: String,
    pub residual: f64,
    pub at: (f64, f64),
    pub pass: bool,
}

/// Outcome of testing one branch: the branch tested, the resulting verdict
/// and the residual of every condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub branch: CaseTag,
    pub verdict: CaseTag,
    pub flags: Flags,
    pub conditions: Vec<ConditionResidual>,
    pub tol: f64,
    pub seed: u64,
}

impl ConditionReport {
    pub fn max_residual(&self) -> f64 {
        self.conditions.iter().fold(0.0, |m, c| m.max(c.residual))
    }

    pub fn passed(&self) -> bool {
        self.verdict != CaseTag::NoQuadraticIntegral
    }
}

pub(crate) fn check_preconditions(state: &ClassifierState, case: CaseTag) -> Result<()> {
    let f = &state.flags;
    let ok = match case {
        CaseTag::LienardAutonomous => f.autonomous,
        CaseTag::FyZero => !f.autonomous && f.fy_zero,
        CaseTag::Generic => !f.autonomous && !f.fy_zero && !f.s_zero,
        CaseTag::SZeroTZero => !f.autonomous && !f.fy_zero && f.s_zero && f.t_zero,
        CaseTag::DZero => !f.autonomous && !f.fy_zero && f.s_zero && !f.t_zero && f.d_zero,
        CaseTag::PyZero => {
            !f.autonomous && !f.fy_zero && f.s_zero && !f.t_zero && !f.d_zero && f.py_zero
        }
        CaseTag::SZero => {
            !f.autonomous && !f.fy_zero && f.s_zero && !f.t_zero && !f.d_zero && !f.py_zero
        }
        CaseTag::NoQuadraticIntegral => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "branch {case} does not match invariant flags {f:?}"
        )))
    }
}

/// Tests the conditions of one branch.
pub fn check_case_conditions(
    sys: &OdeSystem,
    state: &ClassifierState,
    case: CaseTag,
) -> Result<ConditionReport> {
    check_preconditions(state, case)?;
    let mut conditions = Vec::new();
    for (id, e) in case_conditions(&state.inv, case) {
        let r = max_residual(&e, &sys.domain, &sys.params)?;
        conditions.push(ConditionResidual {
            id: id.to_string(),
            residual: r.max,
            at: r.at,
            pass: r.max <= sys.tol,
        });
    }
    // Denominators of the branch formulas must not vanish identically.
    let nonzero: Vec<(&str, &Expr)> = match case {
        CaseTag::LienardAutonomous => vec![("g_y", &state.inv.gy)],
        CaseTag::DZero | CaseTag::PyZero => vec![("f_yy", &state.inv.r)],
        _ => Vec::new(),
    };
    for (name, e) in nonzero {
        let vanishes = sys.zero(e)?;
        conditions.push(ConditionResidual {
            id: format!("nonzero.{name}"),
            residual: if vanishes { 1.0 } else { 0.0 },
            at: (f64::NAN, f64::NAN),
            pass: !vanishes,
        });
    }
    let all = conditions.iter().all(|c| c.pass);
    Ok(ConditionReport {
        branch: case,
        verdict: if all {
            case
        } else {
            CaseTag::NoQuadraticIntegral
        },
        flags: state.flags,
        conditions,
        tol: sys.tol,
        seed: sys.domain.seed,
    })
}

/// Full classification: invariants, branch selection and condition test.
pub fn classify(sys: &OdeSystem) -> Result<(ConditionReport, ClassifierState)> {
    let state = compute_invariants(sys)?;
    let branch = select_branch(&state.flags);
    let report = check_case_conditions(sys, &state, branch)?;
    Ok((report, state))
}

/// True when an integral with `A` free of `z` can exist for an autonomous
/// pair, which requires `f ≡ 0` or `g ≡ 0`. Unlike [`OdeSystem::new`] this
/// accepts degenerate pairs.
pub fn autonomous_integral_test(
    f: &Expr,
    g: &Expr,
    params: &ParamBinding,
    dom: &SampleDomain,
) -> Result<bool> {
    let zero =
        |e: &Expr| -> Result<bool> { Ok(is_identically_zero(e, dom, params, DEFAULT_ZERO_TOL)?) };
    if !(zero(&f.diff(Z))? && zero(&g.diff(Z))?) {
        return Err(Error::Precondition("the pair is not autonomous".into()));
    }
    Ok(zero(f)? || zero(g)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(f: &str, g: &str, params: &[(&str, f64)], y: (f64, f64)) -> OdeSystem {
        let p: ParamBinding = params.iter().copied().collect();
        OdeSystem::parse(f, g, p, SampleDomain::new((0.1, 2.0), y)).unwrap()
    }

    #[test]
    fn branch_order_follows_flags() {
        let mut f = Flags {
            autonomous: true,
            fy_zero: true,
            s_zero: true,
            t_zero: true,
            d_zero: true,
            py_zero: true,
        };
        assert_eq!(select_branch(&f), CaseTag::LienardAutonomous);
        f.autonomous = false;
        assert_eq!(select_branch(&f), CaseTag::FyZero);
        f.fy_zero = false;
        assert_eq!(select_branch(&f), CaseTag::SZeroTZero);
        f.t_zero = false;
        assert_eq!(select_branch(&f), CaseTag::DZero);
        f.d_zero = false;
        assert_eq!(select_branch(&f), CaseTag::PyZero);
        f.py_zero = false;
        assert_eq!(select_branch(&f), CaseTag::SZero);
        f.s_zero = false;
        assert_eq!(select_branch(&f), CaseTag::Generic);
    }

    #[test]
    fn linear_equations_are_rejected() {
        let err = OdeSystem::parse("z", "y*z", ParamBinding::new(), SampleDomain::default());
        assert!(matches!(err, Err(Error::InvalidSystem(_))));
        let err = OdeSystem::parse("0", "y^2", ParamBinding::new(), SampleDomain::default());
        assert!(matches!(err, Err(Error::InvalidSystem(_))));
    }

    #[test]
    fn fy_zero_example() {
        let s = sys("1", "(3/2)*y^2*exp(3*z)", &[], (0.1, 2.0));
        let (rep, _) = classify(&s).unwrap();
        assert_eq!(rep.verdict, CaseTag::FyZero);
    }

    #[test]
    fn s_zero_t_zero_example() {
        let s = sys("3*y^2+z", "y", &[], (0.1, 2.0));
        let (rep, _) = classify(&s).unwrap();
        assert_eq!(rep.verdict, CaseTag::SZeroTZero);
    }

    #[test]
    fn perturbed_lienard_pair_fails() {
        let s = sys(
            "beta*y/(y^2+1)^2",
            "alpha*(y^2+1.01*y+1)",
            &[("alpha", 1.0), ("beta", 1.0)],
            (0.1, 2.0),
        );
        let (rep, _) = classify(&s).unwrap();
        assert_eq!(rep.branch, CaseTag::LienardAutonomous);
        assert_eq!(rep.verdict, CaseTag::NoQuadraticIntegral);
        assert!(rep.max_residual() > 1e-6);
    }

    #[test]
    fn mismatched_precondition_is_an_error() {
        let s = sys("1", "(3/2)*y^2*exp(3*z)", &[], (0.1, 2.0));
        let state = compute_invariants(&s).unwrap();
        assert!(matches!(
            check_case_conditions(&s, &state, CaseTag::Generic),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn autonomous_test_accepts_degenerate_pairs() {
        let p = ParamBinding::new();
        let d = SampleDomain::default();
        assert!(
            autonomous_integral_test(&parse("0").unwrap(), &parse("y^2").unwrap(), &p, &d).unwrap()
        );
        assert!(
            autonomous_integral_test(&parse("y").unwrap(), &parse("0").unwrap(), &p, &d).unwrap()
        );
        assert!(
            !autonomous_integral_test(&parse("y").unwrap(), &parse("y^2").unwrap(), &p, &d)
                .unwrap()
        );
        assert!(
            autonomous_integral_test(&parse("z").unwrap(), &parse("y").unwrap(), &p, &d).is_err()
        );
    }
}
