//! Numeric evaluation through a flat instruction tape.
//!
//! Compilation deduplicates structurally equal subtrees, so the large
//! expressions produced by repeated differentiation evaluate in time
//! proportional to their DAG size. Every division, logarithm, square root
//! and negative power is checked against a guard magnitude and a violation
//! names the offending subexpression.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{rational_to_f64, Expr, Func, Node, Var};

/// Default guard for denominators and ln/sqrt arguments.
pub const DEFAULT_GUARD: f64 = 1e-6;

/// Numeric values for the named parameters of an expression.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamBinding(pub BTreeMap<String, f64>);

impl ParamBinding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn insert(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

impl<'a> FromIterator<(&'a str, f64)> for ParamBinding {
    fn from_iter<I: IntoIterator<Item = (&'a str, f64)>>(iter: I) -> Self {
        ParamBinding(iter.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    SmallDenominator,
    LogArgument,
    SqrtArgument,
    NegativeBase,
    NonFinite,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::SmallDenominator => "denominator below guard",
            DomainKind::LogArgument => "ln argument below guard",
            DomainKind::SqrtArgument => "sqrt argument below guard",
            DomainKind::NegativeBase => "negative base under a fractional power",
            DomainKind::NonFinite => "non-finite value",
        })
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("parameter '{0}' has no value")]
    UnboundParameter(String),
    #[error("{kind} in {subexpr} (value {value:e})")]
    Domain {
        kind: DomainKind,
        subexpr: String,
        value: f64,
    },
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Const(f64),
    Param(u32),
    Z,
    Y,
    Neg(u32),
    Exp(u32),
    Ln(u32),
    Sqrt(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    PowI(u32, i32),
    /// Fractional power. Negative bases are admitted only for an odd
    /// denominator, in which case the result takes the sign given by `NegRoot`.
    PowR(u32, f64, NegRoot),
}

#[derive(Clone, Copy, Debug)]
enum NegRoot {
    Undefined,
    Positive,
    Negative,
}

#[derive(Debug)]
struct TapeInner {
    ops: Vec<Op>,
    nodes: Vec<Expr>,
    params: Vec<String>,
    roots: Vec<u32>,
}

/// Compiled, parameter-agnostic form of one or more expressions.
#[derive(Clone, Debug)]
pub struct Tape(Arc<TapeInner>);

struct Compiler {
    ops: Vec<Op>,
    nodes: Vec<Expr>,
    params: Vec<String>,
    slots: HashMap<Expr, u32>,
}

impl Compiler {
    fn param_index(&mut self, name: &str) -> u32 {
        if let Some(i) = self.params.iter().position(|p| p == name) {
            i as u32
        } else {
            self.params.push(name.to_string());
            (self.params.len() - 1) as u32
        }
    }

    fn emit(&mut self, e: &Expr) -> u32 {
        if let Some(&slot) = self.slots.get(e) {
            return slot;
        }
        let op = match e.node() {
            Node::Const(c) => Op::Const(rational_to_f64(c)),
            Node::Param(p) => Op::Param(self.param_index(p)),
            Node::Var(Var::Z) => Op::Z,
            Node::Var(Var::Y) => Op::Y,
            Node::Neg(a) => Op::Neg(self.emit(a)),
            Node::Func(f, a) => {
                let a = self.emit(a);
                match f {
                    Func::Exp => Op::Exp(a),
                    Func::Ln => Op::Ln(a),
                    Func::Sqrt => Op::Sqrt(a),
                }
            }
            Node::Add(a, b) => {
                let (a, b) = (self.emit(a), self.emit(b));
                Op::Add(a, b)
            }
            Node::Sub(a, b) => {
                let (a, b) = (self.emit(a), self.emit(b));
                Op::Sub(a, b)
            }
            Node::Mul(a, b) => {
                let (a, b) = (self.emit(a), self.emit(b));
                Op::Mul(a, b)
            }
            Node::Div(a, b) => {
                let (a, b) = (self.emit(a), self.emit(b));
                Op::Div(a, b)
            }
            Node::Pow(a, r) => {
                let a = self.emit(a);
                match r.to_integer().to_i32() {
                    Some(k) if r.is_integer() => Op::PowI(a, k),
                    _ => {
                        let sign = if r.denom().is_even() {
                            NegRoot::Undefined
                        } else if r.numer().is_odd() {
                            NegRoot::Negative
                        } else {
                            NegRoot::Positive
                        };
                        Op::PowR(a, rational_to_f64(r), sign)
                    }
                }
            }
        };
        self.ops.push(op);
        self.nodes.push(e.clone());
        let slot = (self.ops.len() - 1) as u32;
        self.slots.insert(e.clone(), slot);
        slot
    }
}

impl Tape {
    pub fn compile(e: &Expr) -> Tape {
        Tape::compile_many(std::slice::from_ref(e))
    }

    /// Compiles several expressions into one tape with shared subterms.
    pub fn compile_many(exprs: &[Expr]) -> Tape {
        let mut c = Compiler {
            ops: Vec::new(),
            nodes: Vec::new(),
            params: Vec::new(),
            slots: HashMap::new(),
        };
        let roots = exprs.iter().map(|e| c.emit(e)).collect();
        Tape(Arc::new(TapeInner {
            ops: c.ops,
            nodes: c.nodes,
            params: c.params,
            roots,
        }))
    }

    pub fn len(&self) -> usize {
        self.0.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.ops.is_empty()
    }

    /// Resolves parameter values; fails on the first unbound name.
    pub fn bind(&self, params: &ParamBinding) -> Result<BoundTape, EvalError> {
        let values = self
            .0
            .params
            .iter()
            .map(|p| {
                params
                    .get(p)
                    .ok_or_else(|| EvalError::UnboundParameter(p.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BoundTape {
            tape: self.clone(),
            values,
        })
    }
}

/// A tape with parameter values attached, ready for repeated evaluation.
#[derive(Clone, Debug)]
pub struct BoundTape {
    tape: Tape,
    values: Vec<f64>,
}

fn describe(e: &Expr) -> String {
    let s = e.to_string();
    if s.chars().count() > 160 {
        let head: String = s.chars().take(157).collect();
        format!("{head}...")
    } else {
        s
    }
}

impl BoundTape {
    fn fail(&self, kind: DomainKind, slot: u32, value: f64) -> EvalError {
        EvalError::Domain {
            kind,
            subexpr: describe(&self.tape.0.nodes[slot as usize]),
            value,
        }
    }

    fn run(&self, z: f64, y: f64, guard: f64, buf: &mut Vec<f64>) -> Result<(), EvalError> {
        let inner = &self.tape.0;
        buf.clear();
        buf.reserve(inner.ops.len());
        for (i, op) in inner.ops.iter().enumerate() {
            let v = match *op {
                Op::Const(c) => c,
                Op::Param(p) => self.values[p as usize],
                Op::Z => z,
                Op::Y => y,
                Op::Neg(a) => -buf[a as usize],
                Op::Exp(a) => buf[a as usize].exp(),
                Op::Ln(a) => {
                    let x = buf[a as usize];
                    if x.is_nan() || x < guard || x <= 0.0 {
                        return Err(self.fail(DomainKind::LogArgument, a, x));
                    }
                    x.ln()
                }
                Op::Sqrt(a) => {
                    let x = buf[a as usize];
                    if x.is_nan() || x < guard {
                        return Err(self.fail(DomainKind::SqrtArgument, a, x));
                    }
                    x.sqrt()
                }
                Op::Add(a, b) => buf[a as usize] + buf[b as usize],
                Op::Sub(a, b) => buf[a as usize] - buf[b as usize],
                Op::Mul(a, b) => buf[a as usize] * buf[b as usize],
                Op::Div(a, b) => {
                    let d = buf[b as usize];
                    if !(d.abs() >= guard && d != 0.0) {
                        return Err(self.fail(DomainKind::SmallDenominator, b, d));
                    }
                    buf[a as usize] / d
                }
                Op::PowI(a, k) => {
                    let x = buf[a as usize];
                    if k < 0 && !(x.abs() >= guard && x != 0.0) {
                        return Err(self.fail(DomainKind::SmallDenominator, a, x));
                    }
                    x.powi(k)
                }
                Op::PowR(a, r, sign) => {
                    let x = buf[a as usize];
                    if r < 0.0 && !(x.abs() >= guard && x != 0.0) {
                        return Err(self.fail(DomainKind::SmallDenominator, a, x));
                    }
                    if x < 0.0 {
                        match sign {
                            NegRoot::Undefined => {
                                return Err(self.fail(DomainKind::NegativeBase, a, x))
                            }
                            NegRoot::Positive => (-x).powf(r),
                            NegRoot::Negative => -(-x).powf(r),
                        }
                    } else {
                        x.powf(r)
                    }
                }
            };
            if !v.is_finite() {
                return Err(self.fail(DomainKind::NonFinite, i as u32, v));
            }
            buf.push(v);
        }
        Ok(())
    }

    /// Value of the first compiled expression.
    pub fn eval(&self, z: f64, y: f64, guard: f64) -> Result<f64, EvalError> {
        let mut buf = Vec::new();
        self.run(z, y, guard, &mut buf)?;
        Ok(buf[self.tape.0.roots[0] as usize])
    }

    /// Value of the first expression and the largest magnitude taken by any
    /// of its subterms, used to scale residuals of cancelling sums.
    pub fn eval_scaled(&self, z: f64, y: f64, guard: f64) -> Result<(f64, f64), EvalError> {
        let mut buf = Vec::new();
        self.run(z, y, guard, &mut buf)?;
        let scale = buf.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((buf[self.tape.0.roots[0] as usize], scale))
    }

    /// Values of every compiled root, in compilation order.
    pub fn eval_all(&self, z: f64, y: f64, guard: f64) -> Result<Vec<f64>, EvalError> {
        let mut buf = Vec::new();
        self.run(z, y, guard, &mut buf)?;
        Ok(self.tape.0.roots.iter().map(|&r| buf[r as usize]).collect())
    }
}

/// Closed-form scalar field on the plane with its two first partials.
#[derive(Clone, Debug)]
pub struct ExprFn {
    pub expr: Expr,
    tape: BoundTape,
    params: ParamBinding,
    guard: f64,
}

impl ExprFn {
    pub fn new(expr: &Expr, params: &ParamBinding, guard: f64) -> Result<ExprFn, EvalError> {
        let dz = expr.diff(Var::Z);
        let dy = expr.diff(Var::Y);
        let tape = Tape::compile_many(&[expr.clone(), dz, dy]).bind(params)?;
        Ok(ExprFn {
            expr: expr.clone(),
            tape,
            params: params.clone(),
            guard,
        })
    }

    /// Another expression under the same bindings and guard.
    pub fn with_expr(&self, expr: &Expr) -> Result<ExprFn, EvalError> {
        ExprFn::new(expr, &self.params, self.guard)
    }

    pub fn value(&self, z: f64, y: f64) -> Result<f64, EvalError> {
        // The whole tape runs so guard violations in the partials are seen
        // at the same points as violations in the value.
        Ok(self.tape.eval_all(z, y, self.guard)?[0])
    }

    /// `(value, ∂z, ∂y)` at a point.
    pub fn jet(&self, z: f64, y: f64) -> Result<(f64, f64, f64), EvalError> {
        let v = self.tape.eval_all(z, y, self.guard)?;
        Ok((v[0], v[1], v[2]))
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn evaluates_with_parameters() {
        let e = parse("alpha^2*(2*y^3+3*z*y^2+z^2*y) - y/(2*y+z)^2").unwrap();
        let p = ParamBinding::new().with("alpha", 1.0);
        let v = e.eval(1.0, 1.0, &p).unwrap();
        assert!((v - (6.0 - 1.0 / 9.0)).abs() < 1e-14);
    }

    #[test]
    fn guard_violation_names_the_subexpression() {
        let e = parse("1/(y-z)").unwrap();
        let err = e.eval(1.0, 1.0, &ParamBinding::new()).unwrap_err();
        match err {
            EvalError::Domain { kind, subexpr, .. } => {
                assert_eq!(kind, DomainKind::SmallDenominator);
                assert_eq!(subexpr, "y-z");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("ln(y)")
                .unwrap()
                .eval(0.0, -1.0, &ParamBinding::new()),
            Err(EvalError::Domain {
                kind: DomainKind::LogArgument,
                ..
            })
        ));
        assert!(matches!(
            parse("y^(1/2)")
                .unwrap()
                .eval(0.0, -1.0, &ParamBinding::new()),
            Err(EvalError::Domain {
                kind: DomainKind::NegativeBase,
                ..
            })
        ));
    }

    #[test]
    fn odd_roots_of_negative_bases() {
        let p = ParamBinding::new();
        let v = parse("y^(1/3)").unwrap().eval(0.0, -8.0, &p).unwrap();
        assert!((v + 2.0).abs() < 1e-14);
        let v = parse("y^(2/3)").unwrap().eval(0.0, -8.0, &p).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn unbound_parameter_is_reported() {
        let err = parse("beta*y")
            .unwrap()
            .eval(0.0, 1.0, &ParamBinding::new());
        assert_eq!(err, Err(EvalError::UnboundParameter("beta".into())));
    }

    #[test]
    fn shared_subterms_compile_once() {
        let s = parse("(y+z)^2").unwrap();
        let e = &s * &s + &s;
        assert_eq!(Tape::compile(&e).len(), 6);
    }
}
