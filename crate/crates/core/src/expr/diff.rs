//! Symbolic partial differentiation.
//!
//! Results are built with the simplifying constructors and memoized per node
//! so that shared subtrees are differentiated once.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::One;

use super::{Expr, Func, Node, Var};

pub(super) fn differentiate(e: &Expr, v: Var) -> Expr {
    let mut memo = HashMap::new();
    go(e, v, &mut memo)
}

fn go(e: &Expr, v: Var, memo: &mut HashMap<usize, Expr>) -> Expr {
    if !e.depends_on(v) {
        return Expr::zero();
    }
    let key = Arc::as_ptr(&e.0) as usize;
    if let Some(d) = memo.get(&key) {
        return d.clone();
    }
    let d = match e.node() {
        Node::Const(_) | Node::Param(_) => Expr::zero(),
        Node::Var(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Neg(a) => go(a, v, memo).neg(),
        Node::Add(a, b) => go(a, v, memo).add(&go(b, v, memo)),
        Node::Sub(a, b) => go(a, v, memo).sub(&go(b, v, memo)),
        Node::Mul(a, b) => {
            let da = go(a, v, memo);
            let db = go(b, v, memo);
            da.mul(b).add(&a.mul(&db))
        }
        Node::Div(a, b) => {
            let da = go(a, v, memo);
            let db = go(b, v, memo);
            if db.is_zero_const() {
                da.div(b)
            } else {
                da.mul(b).sub(&a.mul(&db)).div(&b.powi(2))
            }
        }
        Node::Pow(a, r) => {
            let da = go(a, v, memo);
            let lowered = if (r - super::Rational::one()).is_one() {
                a.clone()
            } else {
                a.powr(r - super::Rational::one())
            };
            Expr::constant(r.clone()).mul(&lowered).mul(&da)
        }
        Node::Func(Func::Exp, a) => e.mul(&go(a, v, memo)),
        Node::Func(Func::Ln, a) => go(a, v, memo).div(a),
        Node::Func(Func::Sqrt, a) => go(a, v, memo).div(&Expr::int(2).mul(e)),
    };
    memo.insert(key, d.clone());
    d
}
