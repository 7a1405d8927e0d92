//! The sl(2) Lax pair of a quadratic first integral.
//!
//! With `w = y' + A` and `U = sqrt(B)`,
//!
//! ```text
//! L = [[w, U], [U, -w]],   M = [[0, m], [-m, 0]],   m = B_y / (4U),
//! ```
//!
//! and along solutions `dL/dz = [L, M]` holds exactly when `A` and `B`
//! satisfy the defining relations of the integral. `U` is complex where
//! `B < 0`, so every matrix computation runs over the complex numbers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classify::OdeSystem;
use crate::error::{Error, Result};
use crate::expr::{
    is_identically_zero, simplify, sqrt_exact, BoundTape, Expr, ExprFn, SampleDomain, Tape, Var,
};
use crate::integral::FirstIntegral;
use crate::odesolve::Trajectory;

/// Largest power accepted by [`LaxPair::trace_power`].
pub const MAX_TRACE_POWER: u32 = 8;
/// Step of the five-point finite-difference oracle for `dL/dz`.
const FD_STEP: f64 = 1e-3;

pub type Mat2 = [[Complex64; 2]; 2];

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

pub fn trace(a: &Mat2) -> Complex64 {
    a[0][0] + a[1][1]
}

pub fn frobenius(a: &Mat2) -> f64 {
    a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Principal square root, imaginary for negative arguments.
fn principal_sqrt(b: f64) -> Complex64 {
    if b >= 0.0 {
        c(b.sqrt())
    } else {
        Complex64::new(0.0, (-b).sqrt())
    }
}

/// Entries of `L` and `M` at one point of phase space.
#[derive(Clone, Copy, Debug)]
pub struct LaxPoint {
    pub l: Mat2,
    pub m: Mat2,
    /// `U` is imaginary here.
    pub complex: bool,
    /// `|U|` is above the guard, so `M` is defined. Otherwise `M` is
    /// reported as zero.
    pub m_defined: bool,
}

/// `(L, M)` built from a first integral.
#[derive(Clone, Debug)]
pub struct LaxPair {
    pub fi: FirstIntegral,
    /// Symbolic `U`, when `B` is a closed form.
    pub u_expr: Option<Expr>,
    /// Symbolic off-diagonal entry of `M`, when `B` is a closed form.
    pub m_expr: Option<Expr>,
    /// `B ≡ 0`: `L` is diagonal and `M = 0`.
    pub degenerate: bool,
    /// Smallest `|U|` at which `M` is evaluated.
    pub guard: f64,
    /// Multiplier on `M`; 1 except in negative controls of the residual.
    pub m_scale: f64,
}

/// Chooses the sign of an exact root so that it is the principal square
/// root of `b` at every sample point, or gives up.
fn principal_root(root: &Expr, b: &ExprFn, dom: &SampleDomain) -> Option<Expr> {
    let r = b.with_expr(root).ok()?;
    let signs = dom
        .sample(|z, y| -> Result<f64> {
            let bv = b.value(z, y)?;
            let rv = r.value(z, y)?;
            if bv < 0.0 {
                return Err(Error::InvalidInput("negative B".into()));
            }
            let s = bv.sqrt();
            let tol = 1e-9 * (1.0 + s);
            Ok(if (rv - s).abs() <= tol {
                1.0
            } else if (rv + s).abs() <= tol {
                -1.0
            } else {
                0.0
            })
        })
        .ok()?;
    let pos = signs.iter().all(|&s| s > 0.0);
    let neg = signs.iter().all(|&s| s < 0.0);
    match (pos, neg) {
        (true, _) => Some(root.clone()),
        (_, true) => Some(-root),
        _ => None,
    }
}

/// Builds the Lax pair of `fi`.
pub fn build_lax(fi: &FirstIntegral, sys: &OdeSystem) -> Result<LaxPair> {
    let degenerate = fi.degenerate;
    let (u_expr, m_expr) = match (fi.b.as_expr(), &fi.by_expr) {
        (Some(b), Some(by)) if !degenerate => {
            let bf = ExprFn::new(b, &sys.params, sys.domain.guard)?;
            let u = sqrt_exact(b)
                .and_then(|root| principal_root(&root, &bf, &sys.domain))
                .unwrap_or_else(|| b.sqrt());
            let m = simplify(&(simplify(&(by / 4)) / &u));
            (Some(u), Some(m))
        }
        (Some(_), _) if degenerate => (Some(Expr::zero()), Some(Expr::zero())),
        _ => (None, None),
    };
    Ok(LaxPair {
        fi: fi.clone(),
        u_expr,
        m_expr,
        degenerate,
        guard: sys.domain.guard,
        m_scale: 1.0,
    })
}

impl LaxPair {
    /// The same pair with `M` multiplied by `k`.
    pub fn with_m_scale(mut self, k: f64) -> LaxPair {
        self.m_scale = k;
        self
    }

    fn point(&self, w: f64, b: f64, by: f64) -> LaxPoint {
        let w = c(w);
        let u = if self.degenerate {
            c(0.0)
        } else {
            principal_sqrt(b)
        };
        let m_defined = self.degenerate || u.norm() >= self.guard;
        let m = if self.degenerate || !m_defined {
            c(0.0)
        } else {
            c(by) / (4.0 * u) * self.m_scale
        };
        LaxPoint {
            l: [[w, u], [u, -w]],
            m: [[c(0.0), m], [-m, c(0.0)]],
            complex: b < 0.0 && !self.degenerate,
            m_defined,
        }
    }

    /// `L` and `M` at a point of phase space.
    pub fn at(&self, z: f64, y: f64, yp: f64) -> Result<LaxPoint> {
        let a = self.fi.a.value(z, y)?;
        let (b, by) = self.fi.b.value_dy(z, y)?;
        Ok(self.point(yp + a, b, by))
    }

    /// `dL/dz - [L, M]` along the flow of `sys`, with `y''` eliminated
    /// through the equation.
    pub fn residual_matrix(&self, flow: &Flow, z: f64, y: f64, yp: f64) -> Result<(Mat2, bool)> {
        let (a, az, ay) = self.fi.a.jet(z, y)?;
        let (b, bz, by) = self.fi.b.jet(z, y)?;
        let p = self.point(yp + a, b, by);
        if !p.m_defined {
            return Err(Error::Precondition(format!(
                "|U| = {:e} below the guard at z={z}, y={y}",
                p.l[0][1].norm()
            )));
        }
        let ypp = flow.ypp(z, y, yp)?;
        let dw = c(az + ay * yp + ypp);
        let u = p.l[0][1];
        let du = if self.degenerate {
            c(0.0)
        } else {
            c(bz + by * yp) / (2.0 * u)
        };
        let dl: Mat2 = [[dw, du], [du, -dw]];
        let comm = mat_sub(&mat_mul(&p.l, &p.m), &mat_mul(&p.m, &p.l));
        Ok((mat_sub(&dl, &comm), p.complex))
    }

    /// `tr(L^k)`.
    pub fn trace_power(&self, k: u32, z: f64, y: f64, yp: f64) -> Result<Complex64> {
        if k == 0 || k > MAX_TRACE_POWER {
            return Err(Error::InvalidInput(format!(
                "trace power must lie in 1..={MAX_TRACE_POWER}, got {k}"
            )));
        }
        let l = self.at(z, y, yp)?.l;
        let mut p = l;
        for _ in 1..k {
            p = mat_mul(&p, &l);
        }
        Ok(trace(&p))
    }

    /// `tr(L^k) / k!`, whose `k = 2` member is the first integral.
    pub fn trace_invariant(&self, k: u32, z: f64, y: f64, yp: f64) -> Result<Complex64> {
        let fact: f64 = (1..=k).map(f64::from).product();
        Ok(self.trace_power(k, z, y, yp)? / fact)
    }

    /// Roots of `λ^2 - tr(L) λ + det(L)`, larger real part first.
    pub fn eigenvalues(&self, z: f64, y: f64, yp: f64) -> Result<(Complex64, Complex64)> {
        let l = self.at(z, y, yp)?.l;
        let tr = trace(&l);
        let det = l[0][0] * l[1][1] - l[0][1] * l[1][0];
        let disc = (tr * tr - 4.0 * det).sqrt();
        let (a, b) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
        Ok(if a.re >= b.re { (a, b) } else { (b, a) })
    }
}

/// Lax-equation residual along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaxResidualReport {
    /// Largest Frobenius norm of `dL/dz - [L, M]`.
    pub max: f64,
    pub at_z: f64,
    pub per_sample: Vec<f64>,
    /// Samples where `B < 0` and `U` is imaginary.
    pub complex_samples: usize,
    /// Samples skipped because an entry could not be evaluated.
    pub skipped: Vec<(f64, String)>,
}

/// `y'' = -f y' - g`, evaluated without the partials of `f` and `g` so
/// that only their own denominators are guarded.
pub struct Flow {
    f: BoundTape,
    g: BoundTape,
    guard: f64,
}

impl Flow {
    pub fn new(sys: &OdeSystem) -> Result<Flow> {
        Ok(Flow {
            f: Tape::compile(&sys.f).bind(&sys.params)?,
            g: Tape::compile(&sys.g).bind(&sys.params)?,
            guard: sys.domain.guard,
        })
    }

    pub fn ypp(&self, z: f64, y: f64, yp: f64) -> Result<f64> {
        Ok(-self.f.eval(z, y, self.guard)? * yp - self.g.eval(z, y, self.guard)?)
    }
}

/// Evaluates `dL/dz - [L, M]` at every sample of `traj`.
pub fn lax_residual(lp: &LaxPair, sys: &OdeSystem, traj: &Trajectory) -> Result<LaxResidualReport> {
    let flow = Flow::new(sys)?;
    let mut out = LaxResidualReport {
        max: 0.0,
        at_z: traj.ic.z0,
        per_sample: Vec::with_capacity(traj.samples.len()),
        complex_samples: 0,
        skipped: Vec::new(),
    };
    for s in &traj.samples {
        match lp.residual_matrix(&flow, s.z, s.y, s.yp) {
            Ok((r, complex)) => {
                let n = frobenius(&r);
                if n > out.max || n.is_nan() {
                    out.max = n;
                    out.at_z = s.z;
                }
                out.complex_samples += usize::from(complex);
                out.per_sample.push(n);
            }
            Err(e) => out.skipped.push((s.z, e.to_string())),
        }
    }
    Ok(out)
}

/// Result of the finite-difference oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    /// `max |dL/dz (FD) - [L, M]| / (1 + |[L, M]|)`.
    pub max: f64,
    pub evaluated: usize,
    /// Samples with `|U|` below [`FD_U_FLOOR`], where the square root
    /// makes a central difference meaningless, or that could not be
    /// evaluated.
    pub skipped: usize,
}

/// Smallest `|U|` at which the finite-difference oracle is trusted.
pub const FD_U_FLOOR: f64 = 0.1;

/// Secondary oracle: `dL/dz` from a central difference of `L` along the
/// direction of the flow in `(z, y, y')` space instead of the chain rule.
pub fn lax_residual_fd(lp: &LaxPair, sys: &OdeSystem, traj: &Trajectory) -> Result<FdCheck> {
    let flow = Flow::new(sys)?;
    let mut out = FdCheck {
        max: 0.0,
        evaluated: 0,
        skipped: 0,
    };
    for s in &traj.samples {
        let step = || -> Result<Option<f64>> {
            let mid = lp.at(s.z, s.y, s.yp)?;
            if !lp.degenerate && mid.l[0][1].norm() < FD_U_FLOOR {
                return Ok(None);
            }
            let ypp = flow.ypp(s.z, s.y, s.yp)?;
            let h = FD_STEP / (1.0 + s.yp.abs() + ypp.abs());
            let at = |k: f64| lp.at(s.z + k * h, s.y + k * h * s.yp, s.yp + k * h * ypp);
            // Five-point stencils at h and h/2 combined by one Richardson
            // step, so the oracle's own error sits far below its threshold.
            let pts: Vec<LaxPoint> = [2.0, 1.0, 0.5, -0.5, -1.0, -2.0]
                .iter()
                .map(|&k| at(k))
                .collect::<Result<_>>()?;
            let mut dl = [[c(0.0); 2]; 2];
            for (i, row) in dl.iter_mut().enumerate() {
                for (j, d) in row.iter_mut().enumerate() {
                    let e = |n: usize| pts[n].l[i][j];
                    let coarse = (-e(0) + 8.0 * e(1) - 8.0 * e(4) + e(5)) / (12.0 * h);
                    let fine = (-e(1) + 8.0 * e(2) - 8.0 * e(3) + e(4)) / (6.0 * h);
                    *d = fine + (fine - coarse) / 15.0;
                }
            }
            let comm = mat_sub(&mat_mul(&mid.l, &mid.m), &mat_mul(&mid.m, &mid.l));
            Ok(Some(
                frobenius(&mat_sub(&dl, &comm)) / (1.0 + frobenius(&comm)),
            ))
        };
        match step() {
            Ok(Some(v)) => {
                out.evaluated += 1;
                out.max = out.max.max(v);
            }
            _ => out.skipped += 1,
        }
    }
    Ok(out)
}

/// Constancy of the spectrum of `L` along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isospectrality {
    /// `max |λ+(z) - λ+(z0)| / (1 + |λ+(z0)|)`.
    pub eigenvalue_drift: f64,
    /// `max |tr L^2 (z) - tr L^2 (z0)| / (1 + |tr L^2 (z0)|)`.
    pub trace_drift: f64,
    /// `λ+` at the initial point as `(re, im)`.
    pub initial: (f64, f64),
    pub evaluated: usize,
}

pub fn isospectrality(lp: &LaxPair, traj: &Trajectory) -> Result<Isospectrality> {
    let ic = traj.ic;
    let (l0, _) = lp.eigenvalues(ic.z0, ic.y0, ic.yp0)?;
    let t0 = lp.trace_power(2, ic.z0, ic.y0, ic.yp0)?;
    let mut out = Isospectrality {
        eigenvalue_drift: 0.0,
        trace_drift: 0.0,
        initial: (l0.re, l0.im),
        evaluated: 0,
    };
    for s in &traj.samples {
        let (Ok((l, _)), Ok(t)) = (
            lp.eigenvalues(s.z, s.y, s.yp),
            lp.trace_power(2, s.z, s.y, s.yp),
        ) else {
            continue;
        };
        out.evaluated += 1;
        out.eigenvalue_drift = out
            .eigenvalue_drift
            .max((l - l0).norm() / (1.0 + l0.norm()));
        out.trace_drift = out.trace_drift.max((t - t0).norm() / (1.0 + t0.norm()));
    }
    Ok(out)
}

/// Point-wise algebraic identities of the pair at random phase-space
/// points: traceless `L`, vanishing odd traces, `tr(L^2)/2 = I` and
/// antisymmetric `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceIdentities {
    /// `max |tr L|`.
    pub trace_l: f64,
    /// `max |tr L^k|` over odd `k ≤ 7`.
    pub odd_traces: f64,
    /// `max |tr(L^2)/2 - I| / (1 + |I|)`.
    pub half_trace_vs_integral: f64,
    /// `max |M + M^T|`.
    pub m_symmetric_part: f64,
    pub points: usize,
}

/// Checks the trace identities at `count` seeded points of the domain
/// with `y'` drawn from `[-2, 2]`.
pub fn trace_identities(lp: &LaxPair, sys: &OdeSystem, count: usize) -> Result<TraceIdentities> {
    use rand::{Rng, SeedableRng};
    let dom = sys.domain.clone().with_count(count);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(dom.seed ^ 0x5eed);
    let rows = dom.sample(|z, y| -> Result<[f64; 4]> {
        let yp = rng.gen_range(-2.0..=2.0);
        let p = lp.at(z, y, yp)?;
        let i = lp.fi.evaluate(z, y, yp)?;
        let mut odd = 0.0f64;
        for k in [1, 3, 5, 7] {
            odd = odd.max(lp.trace_power(k, z, y, yp)?.norm());
        }
        let t2 = lp.trace_power(2, z, y, yp)?;
        let mt = p.m[0][1] + p.m[1][0];
        Ok([
            trace(&p.l).norm(),
            odd,
            (t2 / 2.0 - i).norm() / (1.0 + i.abs()),
            mt.norm() + (p.m[0][0].norm() + p.m[1][1].norm()),
        ])
    })?;
    let mut out = TraceIdentities {
        trace_l: 0.0,
        odd_traces: 0.0,
        half_trace_vs_integral: 0.0,
        m_symmetric_part: 0.0,
        points: rows.len(),
    };
    for r in rows {
        out.trace_l = out.trace_l.max(r[0]);
        out.odd_traces = out.odd_traces.max(r[1]);
        out.half_trace_vs_integral = out.half_trace_vs_integral.max(r[2]);
        out.m_symmetric_part = out.m_symmetric_part.max(r[3]);
    }
    Ok(out)
}

/// Agreement of `M` with the alternative form `g / (2U)`, which applies
/// when `A` does not depend on `z` and therefore `B_y = 2g`. Returns
/// `None` when that form does not apply.
pub fn alternative_m_residual(lp: &LaxPair, sys: &OdeSystem) -> Result<Option<f64>> {
    let Some(a) = lp.fi.a.as_expr() else {
        return Ok(None);
    };
    if lp.degenerate || !is_identically_zero(&a.diff(Var::Z), &sys.domain, &sys.params, sys.tol)? {
        return Ok(None);
    }
    let g = Tape::compile(&sys.g).bind(&sys.params)?;
    let rows = sys.domain.sample(|z, y| -> Result<f64> {
        let p = lp.at(z, y, 0.0)?;
        if !p.m_defined {
            return Err(Error::Precondition("M undefined".into()));
        }
        let alt = c(g.eval(z, y, lp.guard)?) / (2.0 * p.l[0][1]);
        Ok((p.m[0][1] - alt).norm() / (1.0 + alt.norm()))
    })?;
    Ok(Some(rows.into_iter().fold(0.0, f64::max)))
}
