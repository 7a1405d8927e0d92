//! Dormand–Prince 5(4) integration of `y'' = -f y' - g` with dense output.
//!
//! The trajectory records every accepted step plus an equally spaced grid
//! filled from the continuous extension. Integration halts, keeping the
//! samples gathered so far, when the right-hand side keeps violating the
//! evaluation guard (a singularity of `f` or `g`) or the step size
//! underflows.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::OdeSystem;
use crate::error::{Error, Result};
use crate::expr::{BoundTape, Tape};
use crate::integral::FirstIntegral;

/// Number of equally spaced dense-output intervals across the span.
pub const DENSE_INTERVALS: usize = 200;
const MAX_STEPS: usize = 2_000_000;
const BLOW_UP: f64 = 1e10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub z0: f64,
    pub y0: f64,
    pub yp0: f64,
}

impl InitialCondition {
    pub fn new(z0: f64, y0: f64, yp0: f64) -> Self {
        InitialCondition { z0, y0, yp0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Tolerances { rtol, atol }
    }

    pub fn scaled(self, k: f64) -> Self {
        Tolerances {
            rtol: self.rtol * k,
            atol: self.atol * k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub z: f64,
    pub y: f64,
    pub yp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halt {
    pub z: f64,
    pub reason: String,
}

/// Samples ordered along the direction of integration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub ic: InitialCondition,
    pub span: f64,
    pub tol: Tolerances,
    pub samples: Vec<Sample>,
    pub accepted: usize,
    pub rejected: usize,
    pub halted: Option<Halt>,
}

impl Trajectory {
    pub fn last(&self) -> Sample {
        *self
            .samples
            .last()
            .expect("trajectory holds the initial point")
    }

    /// True when the integration reached the end of the requested span.
    pub fn complete(&self) -> bool {
        self.halted.is_none()
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One attempted step: the new state, the derivative there, the error norm
/// and the coefficients of the continuous extension.
struct Step<const N: usize> {
    x: [f64; N],
    k7: [f64; N],
    err: f64,
    cont: [[f64; N]; 5],
}

fn attempt<const N: usize, F>(
    rhs: &mut F,
    t: f64,
    x: &[f64; N],
    k1: &[f64; N],
    h: f64,
    tol: Tolerances,
) -> std::result::Result<Step<N>, String>
where
    F: FnMut(f64, &[f64; N]) -> std::result::Result<[f64; N], String>,
{
    let mut k = [[0.0; N]; 7];
    k[0] = *k1;
    for s in 1..7 {
        let mut xs = *x;
        for (i, xi) in xs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..s {
                acc += A[s][j] * k[j][i];
            }
            *xi += h * acc;
        }
        k[s] = rhs(t + C[s] * h, &xs)?;
    }
    let mut xn = *x;
    let mut err = 0.0;
    for i in 0..N {
        let mut acc = 0.0;
        let mut e = 0.0;
        for s in 0..7 {
            acc += B[s] * k[s][i];
            e += E[s] * k[s][i];
        }
        xn[i] = x[i] + h * acc;
        let sc = tol.atol + tol.rtol * x[i].abs().max(xn[i].abs());
        err += (h * e / sc).powi(2);
    }
    let err = (err / N as f64).sqrt();
    let mut cont = [[0.0; N]; 5];
    for i in 0..N {
        let dx = xn[i] - x[i];
        let bspl = h * k[0][i] - dx;
        cont[0][i] = x[i];
        cont[1][i] = dx;
        cont[2][i] = bspl;
        cont[3][i] = dx - h * k[6][i] - bspl;
        cont[4][i] = h * (0..7).map(|s| D[s] * k[s][i]).sum::<f64>();
    }
    Ok(Step {
        x: xn,
        k7: k[6],
        err,
        cont,
    })
}

fn interpolate<const N: usize>(cont: &[[f64; N]; 5], theta: f64) -> [f64; N] {
    let t1 = 1.0 - theta;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = cont[0][i]
            + theta * (cont[1][i] + t1 * (cont[2][i] + theta * (cont[3][i] + t1 * cont[4][i])));
    }
    out
}

fn rms<const N: usize>(v: &[f64; N], x: &[f64; N], tol: Tolerances) -> f64 {
    let s: f64 = (0..N)
        .map(|i| (v[i] / (tol.atol + tol.rtol * x[i].abs())).powi(2))
        .sum();
    (s / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    rhs: &mut F,
    t: f64,
    x: &[f64; N],
    k1: &[f64; N],
    dir: f64,
    span: f64,
    tol: Tolerances,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> std::result::Result<[f64; N], String>,
{
    let d0 = rms(x, x, tol);
    let d1 = rms(k1, x, tol);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span.abs());
    let mut x1 = *x;
    for i in 0..N {
        x1[i] += dir * h0 * k1[i];
    }
    let h1 = match rhs(t + dir * h0, &x1) {
        Ok(k2) => {
            let mut diff = [0.0; N];
            for i in 0..N {
                diff[i] = k2[i] - k1[i];
            }
            let d2 = rms(&diff, x, tol) / h0;
            if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            }
        }
        Err(_) => h0 * 1e-3,
    };
    (100.0 * h0).min(h1).min(span.abs())
}

/// Drives the stepper from `t0` to `t1`, calling `on_step` with the step
/// start, the accepted step and its size. Returns the counters and an
/// optional halt description.
fn drive<const N: usize, F, G>(
    rhs: &mut F,
    t0: f64,
    x0: [f64; N],
    t1: f64,
    tol: Tolerances,
    mut on_step: G,
) -> std::result::Result<(usize, usize, Option<Halt>), String>
where
    F: FnMut(f64, &[f64; N]) -> std::result::Result<[f64; N], String>,
    G: FnMut(f64, &Step<N>, f64),
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((0, 0, None));
    }
    let dir = span.signum();
    let mut t = t0;
    let mut x = x0;
    let mut k1 = rhs(t, &x)?;
    let mut h = initial_step(rhs, t, &x, &k1, dir, span, tol);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut last_reject = false;
    let mut last_error = String::new();
    loop {
        if (t1 - t) * dir <= 0.0 {
            return Ok((accepted, rejected, None));
        }
        if accepted + rejected >= MAX_STEPS {
            return Ok((
                accepted,
                rejected,
                Some(Halt {
                    z: t,
                    reason: "step budget exhausted".into(),
                }),
            ));
        }
        let remaining = (t1 - t).abs();
        let mut hs = h.min(remaining);
        // Land exactly on the end point when the last step is nearly full.
        if remaining - hs < 1e-12 * remaining.max(1.0) {
            hs = remaining;
        }
        let hmin = 1e-13 * t.abs().max(1.0);
        if hs < hmin {
            let reason = if last_error.is_empty() {
                "step size underflow".to_string()
            } else {
                format!("step size underflow near a singularity: {last_error}")
            };
            return Ok((accepted, rejected, Some(Halt { z: t, reason })));
        }
        match attempt(rhs, t, &x, &k1, dir * hs, tol) {
            Ok(step) if step.err <= 1.0 && step.x.iter().all(|v| v.is_finite()) => {
                on_step(t, &step, dir * hs);
                t = if hs == remaining { t1 } else { t + dir * hs };
                x = step.x;
                k1 = step.k7;
                accepted += 1;
                let fac = if step.err == 0.0 {
                    5.0
                } else {
                    (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h = if last_reject {
                    hs * fac.min(1.0)
                } else {
                    hs * fac
                };
                last_reject = false;
                last_error.clear();
                if x.iter().any(|v| v.abs() > BLOW_UP) {
                    return Ok((
                        accepted,
                        rejected,
                        Some(Halt {
                            z: t,
                            reason: "solution exceeded 1e10 in magnitude".into(),
                        }),
                    ));
                }
            }
            Ok(step) => {
                rejected += 1;
                last_reject = true;
                let fac = if step.err.is_finite() {
                    (0.9 * step.err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                h = hs * fac;
            }
            Err(e) => {
                rejected += 1;
                last_reject = true;
                last_error = e;
                h = hs * 0.25;
            }
        }
    }
}

/// Integrates a scalar ODE `x' = rhs(t, x)` to `t1` at tight tolerance.
pub(crate) fn solve_scalar<F>(mut rhs: F, t0: f64, x0: f64, t1: f64) -> Result<f64>
where
    F: FnMut(f64, f64) -> std::result::Result<f64, String>,
{
    let tol = Tolerances::new(1e-12, 1e-14);
    let mut wrapped = |t: f64, x: &[f64; 1]| rhs(t, x[0]).map(|v| [v]);
    let mut end = x0;
    let (_, _, halt) = drive(&mut wrapped, t0, [x0], t1, tol, |_, step, _| {
        end = step.x[0];
    })
    .map_err(Error::Quadrature)?;
    if let Some(h) = halt {
        return Err(Error::Quadrature(format!(
            "linear transport stopped at z={}: {}",
            h.z, h.reason
        )));
    }
    Ok(end)
}

struct Rhs {
    f: BoundTape,
    g: BoundTape,
    guard: f64,
}

impl Rhs {
    fn new(sys: &OdeSystem) -> Result<Rhs> {
        Ok(Rhs {
            f: Tape::compile(&sys.f).bind(&sys.params)?,
            g: Tape::compile(&sys.g).bind(&sys.params)?,
            guard: sys.domain.guard,
        })
    }

    fn eval(&self, z: f64, x: &[f64; 2]) -> std::result::Result<[f64; 2], String> {
        let f = self
            .f
            .eval(z, x[0], self.guard)
            .map_err(|e| e.to_string())?;
        let g = self
            .g
            .eval(z, x[0], self.guard)
            .map_err(|e| e.to_string())?;
        Ok([x[1], -f * x[1] - g])
    }
}

/// Integrates the equation from `ic` over `span` (negative spans integrate
/// backwards; a zero span gives the initial sample alone). The initial
/// point must satisfy the evaluation guard.
pub fn integrate(
    sys: &OdeSystem,
    ic: InitialCondition,
    span: f64,
    tol: Tolerances,
) -> Result<Trajectory> {
    if !span.is_finite() {
        return Err(Error::InvalidInput("span must be finite".into()));
    }
    if !(tol.rtol > 0.0 && tol.atol > 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    let rhs = Rhs::new(sys)?;
    rhs.eval(ic.z0, &[ic.y0, ic.yp0])
        .map_err(Error::InadmissibleInitialCondition)?;
    let first = Sample {
        z: ic.z0,
        y: ic.y0,
        yp: ic.yp0,
    };
    if span == 0.0 {
        return Ok(Trajectory {
            ic,
            span,
            tol,
            samples: vec![first],
            accepted: 0,
            rejected: 0,
            halted: None,
        });
    }
    let t1 = ic.z0 + span;
    let grid: Vec<f64> = (1..=DENSE_INTERVALS)
        .map(|k| ic.z0 + span * k as f64 / DENSE_INTERVALS as f64)
        .collect();
    let mut next_grid = 0;
    let dir = span.signum();
    let mut samples = vec![first];
    let mut eval = |z: f64, x: &[f64; 2]| rhs.eval(z, x);
    let (accepted, rejected, halted) =
        drive(&mut eval, ic.z0, [ic.y0, ic.yp0], t1, tol, |t, step, h| {
            let t_new = t + h;
            while next_grid < grid.len() && (grid[next_grid] - t_new) * dir < 0.0 {
                let zg = grid[next_grid];
                let x = interpolate(&step.cont, (zg - t) / h);
                samples.push(Sample {
                    z: zg,
                    y: x[0],
                    yp: x[1],
                });
                next_grid += 1;
            }
            samples.push(Sample {
                z: t_new,
                y: step.x[0],
                yp: step.x[1],
            });
            // A grid point that coincides with the step end is covered.
            while next_grid < grid.len()
                && (grid[next_grid] - t_new).abs() <= 1e-12 * t_new.abs().max(1.0)
            {
                next_grid += 1;
            }
        })
        .map_err(Error::InadmissibleInitialCondition)?;
    if let (None, Some(last)) = (&halted, samples.last_mut()) {
        last.z = t1;
    }
    Ok(Trajectory {
        ic,
        span,
        tol,
        samples,
        accepted,
        rejected,
        halted,
    })
}

/// Conservation statistics of a first integral along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    /// `max |I - I0| / (1 + |I0|)`.
    pub relative: f64,
    /// `max |I - I0|`.
    pub absolute: f64,
    pub initial: f64,
    pub at_z: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Largest deviation of the first integral from its initial value.
pub fn conservation_drift(fi: &FirstIntegral, traj: &Trajectory) -> Result<Drift> {
    let ic = traj.ic;
    let i0 = fi.evaluate(ic.z0, ic.y0, ic.yp0)?;
    let mut out = Drift {
        relative: 0.0,
        absolute: 0.0,
        initial: i0,
        at_z: ic.z0,
        evaluated: 0,
        skipped: 0,
    };
    for s in &traj.samples {
        match fi.evaluate(s.z, s.y, s.yp) {
            Ok(v) => {
                out.evaluated += 1;
                let d = (v - i0).abs();
                if d > out.absolute {
                    out.absolute = d;
                    out.at_z = s.z;
                }
            }
            Err(_) => out.skipped += 1,
        }
    }
    out.relative = out.absolute / (1.0 + i0.abs());
    Ok(out)
}

/// CSV with columns `z,y,yp,I`; the last column is empty without an integral.
pub fn to_csv(traj: &Trajectory, fi: Option<&FirstIntegral>) -> String {
    let mut out = String::from("z,y,yp,I\n");
    for s in &traj.samples {
        let i = fi
            .and_then(|fi| fi.evaluate(s.z, s.y, s.yp).ok())
            .map(|v| v.to_string())
            .unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", s.z, s.y, s.yp, i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{ParamBinding, SampleDomain};

    #[test]
    fn scalar_solver_matches_exponential() {
        let v = solve_scalar(|_, x| Ok(-x), 0.0, 1.0, 2.0).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-12);
        let v = solve_scalar(|t, _| Ok(t.cos()), 0.0, 0.0, -1.0).unwrap();
        assert!((v - (-1.0f64).sin()).abs() < 1e-12);
    }

    #[test]
    fn dense_grid_and_monotone_samples() {
        let sys = OdeSystem::parse(
            "1",
            "(3/2)*y^2*exp(3*z)",
            ParamBinding::new(),
            SampleDomain::default(),
        )
        .unwrap();
        let ic = InitialCondition::new(0.0, 0.5, -0.2);
        for span in [1.0, -1.0] {
            let tr = integrate(&sys, ic, span, Tolerances::default()).unwrap();
            assert!(tr.complete());
            assert!(tr.samples.len() > DENSE_INTERVALS);
            for w in tr.samples.windows(2) {
                assert!((w[1].z - w[0].z) * span > 0.0);
            }
            assert_eq!(tr.last().z, span);
        }
    }

    #[test]
    fn singularity_halts_with_flag() {
        // Attraction toward y = 0 drives the solution into the pole of g.
        let sys =
            OdeSystem::parse("y", "1/y^2", ParamBinding::new(), SampleDomain::default()).unwrap();
        let tr = integrate(
            &sys,
            InitialCondition::new(0.0, 0.5, 0.0),
            10.0,
            Tolerances::default(),
        )
        .unwrap();
        let halt = tr.halted.expect("must halt");
        assert!(halt.z < 10.0);
        assert!(tr.samples.len() >= 2);
    }

    #[test]
    fn inadmissible_initial_point() {
        let sys =
            OdeSystem::parse("y", "1/y^2", ParamBinding::new(), SampleDomain::default()).unwrap();
        let err = integrate(
            &sys,
            InitialCondition::new(0.0, 0.0, 0.0),
            1.0,
            Tolerances::default(),
        );
        assert!(matches!(err, Err(Error::InadmissibleInitialCondition(_))));
    }

    #[test]
    fn zero_span_returns_the_initial_sample() {
        let sys =
            OdeSystem::parse("y", "1/y^2", ParamBinding::new(), SampleDomain::default()).unwrap();
        let ic = InitialCondition::new(0.3, 0.5, -1.0);
        let tr = integrate(&sys, ic, 0.0, Tolerances::default()).unwrap();
        assert_eq!(
            tr.samples,
            vec![Sample {
                z: 0.3,
                y: 0.5,
                yp: -1.0
            }]
        );
        assert!(tr.complete());
    }
}
