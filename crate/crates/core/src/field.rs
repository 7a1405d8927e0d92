//! Scalar fields on the `(z, y)` plane known either in closed form or only
//! through their two partial derivatives.
//!
//! A field given by its partials is recovered by integrating along the
//! axis-aligned path `(z0, y0) → (z, y0) → (z, y)`. The horizontal leg only
//! depends on `z`, so its values at a fixed grid of checkpoints are cached;
//! every evaluation starts from the checkpoint just before `z` on the side of
//! `z0`, which makes the result independent of the order of earlier calls.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, ExprFn, ParamBinding};
use crate::odesolve::solve_scalar;
use crate::quadrature;

/// Absolute tolerance of each quadrature leg.
pub const LEG_TOL: f64 = 1e-10;
/// Spacing of the cached checkpoints along the horizontal leg.
const CHECKPOINT_STEP: f64 = 0.25;

/// Point-wise scalar function of `(z, y)`.
pub type ScalarFn = Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;

/// Base point and value fixing the additive constant of a potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub z0: f64,
    pub y0: f64,
    pub value: f64,
}

impl Anchor {
    pub fn new(z0: f64, y0: f64, value: f64) -> Self {
        Anchor { z0, y0, value }
    }
}

/// A partial derivative used as an integrand. When it is a closed-form
/// expression its own `z` derivative is available, which lets the field
/// report `∂z` by differentiating under the integral sign.
#[derive(Clone)]
pub enum Rate {
    Expr(ExprFn),
    Fn(ScalarFn),
}

impl Rate {
    pub fn expr(e: &Expr, params: &ParamBinding, guard: f64) -> Result<Rate> {
        Ok(Rate::Expr(ExprFn::new(e, params, guard)?))
    }

    pub fn value(&self, z: f64, y: f64) -> Result<f64> {
        match self {
            Rate::Expr(e) => Ok(e.value(z, y)?),
            Rate::Fn(f) => f(z, y),
        }
    }

    fn as_expr(&self) -> Option<&Expr> {
        match self {
            Rate::Expr(e) => Some(&e.expr),
            Rate::Fn(_) => None,
        }
    }
}

/// How the potential changes along the horizontal leg `y = y0`.
#[derive(Clone)]
pub enum ZLeg {
    /// `h'(z) = rate(z, y0)`.
    Rate(Rate),
    /// `h'(z) = a(z, y0) - c(z, y0) h(z)`, for potentials whose `z`
    /// derivative depends on the potential itself.
    Linear { a: Rate, c: Rate },
}

/// Potential `V` with `∂y V = y_rate`, `∂z V = z_partial(z, y, V)` and
/// `V(z0, y0) = value`.
pub struct PathField {
    y_rate: Rate,
    z_leg: ZLeg,
    z_partial: Arc<dyn Fn(f64, f64, f64) -> Result<f64> + Send + Sync>,
    anchor: Anchor,
    checkpoints: Mutex<HashMap<i64, f64>>,
}

impl fmt::Debug for PathField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathField")
            .field("y_rate", &self.y_rate.as_expr().map(|e| e.to_string()))
            .field("anchor", &self.anchor)
            .finish()
    }
}

impl PathField {
    /// Potential of an exact pair `(∂y V, ∂z V)`.
    pub fn from_partials(y_rate: Rate, z_rate: Rate, anchor: Anchor) -> PathField {
        let zr = z_rate.clone();
        PathField {
            y_rate,
            z_leg: ZLeg::Rate(z_rate),
            z_partial: Arc::new(move |z, y, _| zr.value(z, y)),
            anchor,
            checkpoints: Mutex::new(HashMap::new()),
        }
    }

    /// Potential whose `z` derivative is `a - c V`.
    pub fn with_linear_z(y_rate: Rate, a: Rate, c: Rate, anchor: Anchor) -> PathField {
        let (a2, c2) = (a.clone(), c.clone());
        PathField {
            y_rate,
            z_leg: ZLeg::Linear { a, c },
            z_partial: Arc::new(move |z, y, v| Ok(a2.value(z, y)? - c2.value(z, y)? * v)),
            anchor,
            checkpoints: Mutex::new(HashMap::new()),
        }
    }

    /// The same potential plus a constant. Only meaningful for potentials
    /// whose `z` derivative does not depend on the value.
    pub fn shifted(&self, delta: f64) -> PathField {
        let anchor = Anchor::new(self.anchor.z0, self.anchor.y0, self.anchor.value + delta);
        let checkpoints = self
            .checkpoints
            .lock()
            .expect("checkpoint cache")
            .iter()
            .map(|(&k, &v)| (k, v + delta))
            .collect();
        PathField {
            y_rate: self.y_rate.clone(),
            z_leg: self.z_leg.clone(),
            z_partial: self.z_partial.clone(),
            anchor,
            checkpoints: Mutex::new(checkpoints),
        }
    }

    pub fn anchor(&self) -> Anchor {
        self.anchor
    }

    pub fn y_rate_expr(&self) -> Option<&Expr> {
        self.y_rate.as_expr()
    }

    /// Advances the horizontal leg from `(za, ha)` to `zb`.
    fn advance(&self, za: f64, ha: f64, zb: f64) -> Result<f64> {
        let y0 = self.anchor.y0;
        match &self.z_leg {
            ZLeg::Rate(r) => Ok(ha + quadrature::integrate(|s| r.value(s, y0), za, zb, LEG_TOL)?),
            ZLeg::Linear { a, c } => solve_scalar(
                |s, h| {
                    let av = a.value(s, y0).map_err(|e| e.to_string())?;
                    let cv = c.value(s, y0).map_err(|e| e.to_string())?;
                    Ok(av - cv * h)
                },
                za,
                ha,
                zb,
            ),
        }
    }

    fn checkpoint(&self, k: i64) -> Result<f64> {
        if k == 0 {
            return Ok(self.anchor.value);
        }
        if let Some(v) = self.checkpoints.lock().expect("checkpoint cache").get(&k) {
            return Ok(*v);
        }
        // Walk outward from the nearest cached checkpoint.
        let step = k.signum();
        let mut j = k - step;
        let start = loop {
            if j == 0 {
                break self.anchor.value;
            }
            if let Some(v) = self.checkpoints.lock().expect("checkpoint cache").get(&j) {
                break *v;
            }
            j -= step;
        };
        let mut h = start;
        while j != k {
            let za = self.anchor.z0 + j as f64 * CHECKPOINT_STEP;
            let zb = za + step as f64 * CHECKPOINT_STEP;
            h = self.advance(za, h, zb)?;
            j += step;
            self.checkpoints
                .lock()
                .expect("checkpoint cache")
                .insert(j, h);
        }
        Ok(h)
    }

    /// Value of the potential on the horizontal leg.
    pub fn z_leg(&self, z: f64) -> Result<f64> {
        let k = ((z - self.anchor.z0) / CHECKPOINT_STEP).trunc() as i64;
        let zk = self.anchor.z0 + k as f64 * CHECKPOINT_STEP;
        let hk = self.checkpoint(k)?;
        if z == zk {
            Ok(hk)
        } else {
            self.advance(zk, hk, z)
        }
    }

    pub fn value(&self, z: f64, y: f64) -> Result<f64> {
        let h = self.z_leg(z)?;
        let v = quadrature::integrate(|t| self.y_rate.value(z, t), self.anchor.y0, y, LEG_TOL)?;
        Ok(h + v)
    }

    /// `(V, ∂y V)`, skipping the `z` derivative.
    pub fn value_dy(&self, z: f64, y: f64) -> Result<(f64, f64)> {
        Ok((self.value(z, y)?, self.y_rate.value(z, y)?))
    }

    /// `(V, ∂z V, ∂y V)`. With a closed-form `y` rate the `z` derivative is
    /// obtained by differentiating under the integral, so it is an honest
    /// derivative of the reconstructed potential rather than the supplied
    /// `∂z` evaluated back.
    pub fn jet(&self, z: f64, y: f64) -> Result<(f64, f64, f64)> {
        let v = self.value(z, y)?;
        let vy = self.y_rate.value(z, y)?;
        let vz = match &self.y_rate {
            Rate::Expr(e) => {
                let y0 = self.anchor.y0;
                let h = self.z_leg(z)?;
                let lead = (self.z_partial)(z, y0, h)?;
                lead + quadrature::integrate(|t| Ok(e.jet(z, t)?.1), y0, y, LEG_TOL)?
            }
            Rate::Fn(_) => (self.z_partial)(z, y, v)?,
        };
        Ok((v, vz, vy))
    }

    /// Value along the other axis-aligned path `(z0, y0) → (z0, y) → (z, y)`.
    /// Only available for potentials whose `∂z` does not depend on the value.
    pub fn value_other_path(&self, z: f64, y: f64) -> Result<f64> {
        let ZLeg::Rate(_) = self.z_leg else {
            return Err(Error::InvalidInput(
                "the other path needs a value-free z derivative".into(),
            ));
        };
        let a = self.anchor;
        let up = quadrature::integrate(|t| self.y_rate.value(a.z0, t), a.y0, y, LEG_TOL)?;
        let across = quadrature::integrate(|s| (self.z_partial)(s, y, f64::NAN), a.z0, z, LEG_TOL)?;
        Ok(a.value + up + across)
    }
}

/// Scalar field known in closed form or by path integration.
#[derive(Clone)]
pub enum Field {
    Closed(ExprFn),
    Path(Arc<PathField>),
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Closed(e) => write!(f, "Closed({})", e.expr),
            Field::Path(p) => p.fmt(f),
        }
    }
}

impl Field {
    pub fn closed(e: &Expr, params: &ParamBinding, guard: f64) -> Result<Field> {
        Ok(Field::Closed(ExprFn::new(e, params, guard)?))
    }

    pub fn value(&self, z: f64, y: f64) -> Result<f64> {
        match self {
            Field::Closed(e) => Ok(e.value(z, y)?),
            Field::Path(p) => p.value(z, y),
        }
    }

    /// `(value, ∂z, ∂y)` at a point.
    pub fn jet(&self, z: f64, y: f64) -> Result<(f64, f64, f64)> {
        match self {
            Field::Closed(e) => Ok(e.jet(z, y)?),
            Field::Path(p) => p.jet(z, y),
        }
    }

    /// `(value, ∂y)` at a point.
    pub fn value_dy(&self, z: f64, y: f64) -> Result<(f64, f64)> {
        match self {
            Field::Closed(e) => {
                let (v, _, vy) = e.jet(z, y)?;
                Ok((v, vy))
            }
            Field::Path(p) => p.value_dy(z, y),
        }
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match self {
            Field::Closed(e) => Some(&e.expr),
            Field::Path(_) => None,
        }
    }

    pub fn as_path(&self) -> Option<&PathField> {
        match self {
            Field::Closed(_) => None,
            Field::Path(p) => Some(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn rate(s: &str) -> Rate {
        Rate::expr(&parse(s).unwrap(), &ParamBinding::new(), 1e-6).unwrap()
    }

    #[test]
    fn potential_from_partials_matches_closed_form() {
        // V = y^2 exp(z) + ln(y) z, anchored at (0, 1) with value 1.
        let p = PathField::from_partials(
            rate("2*y*exp(z) + z/y"),
            rate("y^2*exp(z) + ln(y)"),
            Anchor::new(0.0, 1.0, 1.0),
        );
        let exact = |z: f64, y: f64| y * y * z.exp() + y.ln() * z;
        for &(z, y) in &[(0.3, 0.5), (1.7, 2.2), (-0.9, 1.4), (0.25, 1.0)] {
            let (v, vz, vy) = p.jet(z, y).unwrap();
            assert!((v - exact(z, y)).abs() < 1e-9, "value at {z},{y}");
            assert!((vz - (y * y * z.exp() + y.ln())).abs() < 1e-9);
            assert!((vy - (2.0 * y * z.exp() + z / y)).abs() < 1e-12);
            assert!((p.value_other_path(z, y).unwrap() - v).abs() < 1e-9);
        }
    }

    #[test]
    fn evaluation_order_does_not_change_values() {
        let make =
            || PathField::from_partials(rate("y"), rate("exp(-z)"), Anchor::new(0.0, 0.0, 0.0));
        let (a, b) = (make(), make());
        let zs = [1.9, 0.2, 1.1, 0.7];
        let first: Vec<f64> = zs.iter().map(|&z| a.value(z, 0.5).unwrap()).collect();
        let second: Vec<f64> = zs.iter().rev().map(|&z| b.value(z, 0.5).unwrap()).collect();
        for (x, y) in first.iter().zip(second.iter().rev()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn linear_z_leg_solves_the_transport_equation() {
        // V = y + exp(-z) solves V_z = y - V with V_y = 1.
        let p =
            PathField::with_linear_z(rate("1"), rate("y"), rate("1"), Anchor::new(0.0, 0.0, 1.0));
        for &(z, y) in &[(0.4, 0.3), (1.8, 1.2), (-0.6, -0.2)] {
            let (v, vz, vy) = p.jet(z, y).unwrap();
            assert!((v - (y + (-z).exp())).abs() < 1e-10);
            assert!((vz + (-z).exp()).abs() < 1e-9);
            assert_eq!(vy, 1.0);
        }
    }
}
