//! Symbolic expressions in the independent variable `z`, the dependent
//! variable `y` and named real parameters.
//!
//! Trees are immutable and reference counted, so sharing a subexpression
//! between several derived quantities costs nothing. Every node caches a
//! structural hash and the set of variables it depends on, which keeps
//! derivative pruning and tape deduplication cheap.

mod diff;
mod eval;
mod parse;
mod poly;
mod print;
mod rational;
mod zero;

use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use eval::{BoundTape, DomainKind, EvalError, ExprFn, ParamBinding, Tape, DEFAULT_GUARD};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use print::to_latex;
pub(crate) use rational::{antiderivative_in_y, polynomial_potential, sqrt_exact};
pub use rational::{normalize_rational, simplify};
pub use zero::{is_identically_zero, max_residual, CoverageError, Residual, SampleDomain};

/// Exact rational number used for every literal constant.
pub type Rational = BigRational;

/// The two variables of the plane the equation lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Z,
    Y,
}

impl Var {
    fn mask(self) -> u8 {
        match self {
            Var::Z => 1,
            Var::Y => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::Z => "z",
            Var::Y => "y",
        }
    }
}

/// Elementary functions admitted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Const(Rational),
    Param(Arc<str>),
    Var(Var),
    Neg(Expr),
    Func(Func, Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    /// Power with a rational constant exponent.
    Pow(Expr, Rational),
}

#[derive(Debug)]
struct Inner {
    node: Node,
    hash: u64,
    vars: u8,
    size: usize,
}

/// Handle to an immutable expression tree.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

fn fnv(seed: u64, data: u64) -> u64 {
    let mut h = seed ^ 0xcbf2_9ce4_8422_2325;
    for b in data.to_le_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn hash_rational(r: &Rational) -> u64 {
    let mut s = std::collections::hash_map::DefaultHasher::new();
    r.hash(&mut s);
    s.finish()
}

fn hash_str(x: &str) -> u64 {
    let mut s = std::collections::hash_map::DefaultHasher::new();
    x.hash(&mut s);
    s.finish()
}

impl Expr {
    /// Wraps a node without any simplification.
    pub fn raw(node: Node) -> Expr {
        let (hash, vars, size) = match &node {
            Node::Const(c) => (fnv(1, hash_rational(c)), 0, 1),
            Node::Param(p) => (fnv(2, hash_str(p)), 0, 1),
            Node::Var(v) => (fnv(3, v.mask() as u64), v.mask(), 1),
            Node::Neg(a) => (fnv(4, a.hash_value()), a.vars(), a.size() + 1),
            Node::Func(f, a) => (fnv(5 + *f as u64, a.hash_value()), a.vars(), a.size() + 1),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let tag = match &node {
                    Node::Add(..) => 10,
                    Node::Sub(..) => 11,
                    Node::Mul(..) => 12,
                    _ => 13,
                };
                (
                    fnv(fnv(tag, a.hash_value()), b.hash_value()),
                    a.vars() | b.vars(),
                    a.size() + b.size() + 1,
                )
            }
            Node::Pow(a, r) => (
                fnv(fnv(14, a.hash_value()), hash_rational(r)),
                a.vars(),
                a.size() + 1,
            ),
        };
        Expr(Arc::new(Inner {
            node,
            hash,
            vars,
            size,
        }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn hash_value(&self) -> u64 {
        self.0.hash
    }

    fn vars(&self) -> u8 {
        self.0.vars
    }

    /// Number of nodes counted as a tree (shared nodes counted repeatedly).
    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.vars() & v.mask() != 0
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn constant(r: Rational) -> Expr {
        Expr::raw(Node::Const(r))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(Rational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::constant(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn z() -> Expr {
        Expr::raw(Node::Var(Var::Z))
    }

    pub fn y() -> Expr {
        Expr::raw(Node::Var(Var::Y))
    }

    pub fn var(v: Var) -> Expr {
        Expr::raw(Node::Var(v))
    }

    pub fn param(name: &str) -> Expr {
        Expr::raw(Node::Param(Arc::from(name)))
    }

    /// Converts a finite float to the exact rational of its shortest decimal
    /// representation, so `0.1` becomes `1/10` rather than a binary fraction.
    pub fn from_f64(x: f64) -> Option<Expr> {
        rational_from_f64(x).map(Expr::constant)
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero_const(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one_const(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    /// Names of all parameters appearing in the expression, sorted.
    pub fn params(&self) -> Vec<String> {
        let mut out = std::collections::BTreeSet::new();
        let mut stack = vec![self.clone()];
        let mut seen = std::collections::HashSet::new();
        while let Some(e) = stack.pop() {
            if !seen.insert(Arc::as_ptr(&e.0) as usize) {
                continue;
            }
            match e.node() {
                Node::Param(p) => {
                    out.insert(p.to_string());
                }
                Node::Const(_) | Node::Var(_) => {}
                Node::Neg(a) | Node::Func(_, a) | Node::Pow(a, _) => stack.push(a.clone()),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
        out.into_iter().collect()
    }

    /// Number of distinct nodes in the expression DAG.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(Arc::as_ptr(&e.0) as usize) {
                continue;
            }
            match e.node() {
                Node::Const(_) | Node::Param(_) | Node::Var(_) => {}
                Node::Neg(a) | Node::Func(_, a) | Node::Pow(a, _) => stack.push(a.clone()),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
        seen.len()
    }

    /// Substitutes a value expression for every occurrence of a parameter.
    pub fn substitute_param(&self, name: &str, value: &Expr) -> Expr {
        let mut memo = std::collections::HashMap::new();
        subst(self, name, value, &mut memo)
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c.clone()),
            Node::Neg(a) => a.clone(),
            _ => Expr::raw(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, other: &Expr) -> Expr {
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => Expr::constant(a + b),
            _ if self.is_zero_const() => other.clone(),
            _ if other.is_zero_const() => self.clone(),
            (_, Node::Neg(b)) => self.sub(b),
            (_, Node::Const(c)) if c.is_negative() => {
                Expr::raw(Node::Sub(self.clone(), Expr::constant(-c.clone())))
            }
            _ => Expr::raw(Node::Add(self.clone(), other.clone())),
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => Expr::constant(a - b),
            _ if other.is_zero_const() => self.clone(),
            _ if self.is_zero_const() => other.neg(),
            _ if self == other => Expr::zero(),
            (_, Node::Neg(b)) => self.add(b),
            _ => Expr::raw(Node::Sub(self.clone(), other.clone())),
        }
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => Expr::constant(a * b),
            _ if self.is_zero_const() || other.is_zero_const() => Expr::zero(),
            _ if self.is_one_const() => other.clone(),
            _ if other.is_one_const() => self.clone(),
            (Node::Const(c), _) if (-c).is_one() => other.neg(),
            (_, Node::Const(_)) => other.mul(self),
            (Node::Neg(a), Node::Neg(b)) => a.mul(b),
            (Node::Neg(a), _) => a.mul(other).neg(),
            (_, Node::Neg(b)) => self.mul(b).neg(),
            (Node::Const(a), Node::Mul(l, r)) if l.as_const().is_some() => {
                let c = a * l.as_const().unwrap();
                Expr::constant(c).mul(r)
            }
            _ => Expr::raw(Node::Mul(self.clone(), other.clone())),
        }
    }

    pub fn div(&self, other: &Expr) -> Expr {
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) if !b.is_zero() => Expr::constant(a / b),
            _ if self.is_zero_const() => Expr::zero(),
            _ if other.is_one_const() => self.clone(),
            (_, Node::Const(c)) if !c.is_zero() => Expr::constant(c.recip()).mul(self),
            _ if self == other => Expr::one(),
            (Node::Neg(a), _) => a.div(other).neg(),
            (_, Node::Neg(b)) => self.div(b).neg(),
            _ => Expr::raw(Node::Div(self.clone(), other.clone())),
        }
    }

    pub fn powr(&self, exp: Rational) -> Expr {
        if exp.is_zero() {
            return Expr::one();
        }
        if exp.is_one() {
            return self.clone();
        }
        match self.node() {
            Node::Const(c) if exp.is_integer() => {
                if let Some(k) = exp.to_integer().to_i32() {
                    if c.is_zero() && k < 0 {
                        return Expr::raw(Node::Pow(self.clone(), exp));
                    }
                    if k.unsigned_abs() <= 64 {
                        return Expr::constant(num_traits::pow::Pow::pow(c, k));
                    }
                }
                Expr::raw(Node::Pow(self.clone(), exp))
            }
            Node::Pow(base, inner) if exp.is_integer() => base.powr(inner * &exp),
            _ => Expr::raw(Node::Pow(self.clone(), exp)),
        }
    }

    pub fn powi(&self, k: i64) -> Expr {
        self.powr(Rational::from_integer(BigInt::from(k)))
    }

    pub fn func(f: Func, arg: &Expr) -> Expr {
        match (f, arg.node()) {
            (Func::Exp, _) if arg.is_zero_const() => Expr::one(),
            (Func::Ln, _) if arg.is_one_const() => Expr::zero(),
            (Func::Ln, Node::Func(Func::Exp, inner)) => inner.clone(),
            (Func::Sqrt, _) if arg.is_zero_const() || arg.is_one_const() => arg.clone(),
            _ => Expr::raw(Node::Func(f, arg.clone())),
        }
    }

    pub fn exp(&self) -> Expr {
        Expr::func(Func::Exp, self)
    }

    pub fn ln(&self) -> Expr {
        Expr::func(Func::Ln, self)
    }

    pub fn sqrt(&self) -> Expr {
        Expr::func(Func::Sqrt, self)
    }

    /// Partial derivative with simplifying constructors.
    pub fn diff(&self, v: Var) -> Expr {
        diff::differentiate(self, v)
    }

    /// Repeated partial derivative, e.g. `d(&[Z, Y, Y])` is `∂z ∂y ∂y`.
    pub fn d(&self, vars: &[Var]) -> Expr {
        vars.iter().fold(self.clone(), |e, v| e.diff(*v))
    }

    /// Compiles to a tape and evaluates once with the default guard.
    pub fn eval(&self, z: f64, y: f64, params: &ParamBinding) -> Result<f64, EvalError> {
        Tape::compile(self).bind(params)?.eval(z, y, DEFAULT_GUARD)
    }
}

fn subst(
    e: &Expr,
    name: &str,
    value: &Expr,
    memo: &mut std::collections::HashMap<usize, Expr>,
) -> Expr {
    let key = Arc::as_ptr(&e.0) as usize;
    if let Some(r) = memo.get(&key) {
        return r.clone();
    }
    let out = match e.node() {
        Node::Param(p) if &**p == name => value.clone(),
        Node::Const(_) | Node::Param(_) | Node::Var(_) => e.clone(),
        Node::Neg(a) => subst(a, name, value, memo).neg(),
        Node::Func(f, a) => Expr::func(*f, &subst(a, name, value, memo)),
        Node::Pow(a, r) => subst(a, name, value, memo).powr(r.clone()),
        Node::Add(a, b) => subst(a, name, value, memo).add(&subst(b, name, value, memo)),
        Node::Sub(a, b) => subst(a, name, value, memo).sub(&subst(b, name, value, memo)),
        Node::Mul(a, b) => subst(a, name, value, memo).mul(&subst(b, name, value, memo)),
        Node::Div(a, b) => subst(a, name, value, memo).div(&subst(b, name, value, memo)),
    };
    memo.insert(key, out.clone());
    out
}

/// Shortest round-tripping decimal of `x` as an exact rational.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let s = format!("{:e}", x);
    let (mantissa, exponent) = s.split_once('e')?;
    let exponent: i32 = exponent.parse().ok()?;
    let negative = mantissa.starts_with('-');
    let digits = mantissa.trim_start_matches('-');
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let all: String = format!("{int_part}{frac_part}");
    let mut num: BigInt = all.parse().ok()?;
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow::pow(ten, (-scale) as usize))
    };
    Some(r)
}

/// Nearest f64 to a rational, robust to huge numerators and denominators.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let n = r.numer().to_string();
    let d = r.denom().to_string();
    let nl = n.trim_start_matches('-').len() as i32;
    let dl = d.len() as i32;
    let nf: f64 = format!(
        "{}0.{}",
        if r.is_negative() { "-" } else { "" },
        n.trim_start_matches('-')
    )
    .parse()
    .unwrap_or(0.0);
    let df: f64 = format!("0.{d}").parse().unwrap_or(1.0);
    nf / df * 10f64.powi(nl - dl)
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash
                && self.0.size == other.0.size
                && self.0.node == other.0.node)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Expr, ParseError> {
        parse(s)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$inner(self, rhs)
            }
        }
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$inner(&self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$inner(&self, rhs)
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$inner(self, &rhs)
            }
        }
        impl ops::$trait<i64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                Expr::$inner(self, &Expr::int(rhs))
            }
        }
        impl ops::$trait<i64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                Expr::$inner(&self, &Expr::int(rhs))
            }
        }
        impl ops::$trait<&Expr> for i64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$inner(&Expr::int(self), rhs)
            }
        }
        impl ops::$trait<Expr> for i64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$inner(&Expr::int(self), &rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
