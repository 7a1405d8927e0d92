//! Canonical text and LaTeX rendering.
//!
//! The text form uses the fewest parentheses that still re-parse to the same
//! tree. Constants that are negative or non-integer are always parenthesized
//! when they appear inside a larger expression.

use std::fmt::{self, Write};

use num_traits::{Signed, Zero};

use super::{Expr, Func, Node, Rational};

const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        _ => ATOM,
    }
}

fn plain_const(c: &Rational) -> bool {
    c.is_integer() && !c.is_negative()
}

fn exponent_text(r: &Rational) -> String {
    if plain_const(r) {
        r.to_string()
    } else {
        format!("({r})")
    }
}

fn write_child(out: &mut String, e: &Expr, min: u8, right: bool) {
    let wrap = match e.node() {
        Node::Const(c) => !plain_const(c),
        Node::Neg(_) => right || prec(e) < min,
        _ => prec(e) < min,
    };
    if wrap {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e.node() {
        Node::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Node::Param(p) => out.push_str(p),
        Node::Var(v) => out.push_str(v.name()),
        Node::Neg(a) => {
            out.push('-');
            write_child(out, a, 3, false);
        }
        Node::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(out, a);
            out.push(')');
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            write_child(out, a, 1, false);
            out.push(if matches!(e.node(), Node::Add(..)) {
                '+'
            } else {
                '-'
            });
            write_child(out, b, 2, true);
        }
        Node::Mul(a, b) | Node::Div(a, b) => {
            write_child(out, a, 2, false);
            out.push(if matches!(e.node(), Node::Mul(..)) {
                '*'
            } else {
                '/'
            });
            write_child(out, b, 3, true);
        }
        Node::Pow(a, r) => {
            write_child(out, a, ATOM, false);
            out.push('^');
            out.push_str(&exponent_text(r));
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self);
        f.write_str(&s)
    }
}

const GREEK: [&str; 24] = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa",
    "lambda", "mu", "nu", "xi", "omicron", "pi", "rho", "sigma", "tau", "upsilon", "phi", "chi",
    "psi", "omega",
];

fn latex_param(name: &str) -> String {
    if GREEK.contains(&name) && name != "omicron" {
        format!("\\{name}")
    } else if name.chars().count() == 1 {
        name.to_string()
    } else {
        format!("\\mathrm{{{}}}", name.replace('_', "\\_"))
    }
}

fn latex_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.to_string()
    } else {
        let sign = if c.is_negative() { "-" } else { "" };
        format!("{sign}\\frac{{{}}}{{{}}}", c.numer().abs(), c.denom())
    }
}

fn latex_child(e: &Expr, min: u8) -> String {
    let inner = latex(e);
    let wrap = match e.node() {
        Node::Const(c) => c.is_negative() || (!c.is_integer() && min >= ATOM),
        _ => prec(e) < min,
    };
    if wrap {
        format!("\\left({inner}\\right)")
    } else {
        inner
    }
}

fn latex(e: &Expr) -> String {
    match e.node() {
        Node::Const(c) => latex_rational(c),
        Node::Param(p) => latex_param(p),
        Node::Var(v) => v.name().to_string(),
        Node::Neg(a) => format!("-{}", latex_child(a, 3)),
        Node::Func(Func::Sqrt, a) => format!("\\sqrt{{{}}}", latex(a)),
        Node::Func(Func::Exp, a) => format!("e^{{{}}}", latex(a)),
        Node::Func(Func::Ln, a) => format!("\\ln\\left({}\\right)", latex(a)),
        Node::Add(a, b) => format!("{} + {}", latex_child(a, 1), latex_child(b, 2)),
        Node::Sub(a, b) => format!("{} - {}", latex_child(a, 1), latex_child(b, 2)),
        Node::Mul(a, b) => {
            let rhs = latex_child(b, 3);
            let sep = if rhs.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
                " \\cdot "
            } else {
                " "
            };
            format!("{}{sep}{rhs}", latex_child(a, 2))
        }
        Node::Div(a, b) => format!("\\frac{{{}}}{{{}}}", latex(a), latex(b)),
        Node::Pow(a, r) => {
            let base = latex_child(a, ATOM);
            if r.is_zero() {
                "1".into()
            } else {
                format!("{base}^{{{}}}", latex_rational(r))
            }
        }
    }
}

/// LaTeX rendering suitable for inline math.
pub fn to_latex(e: &Expr) -> String {
    latex(e)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn minimal_parentheses() {
        for (src, want) in [
            ("(a+b)*c", "(a+b)*c"),
            ("a+(b*c)", "a+b*c"),
            ("a/(b*c)", "a/(b*c)"),
            ("(a/b)*c", "a/b*c"),
            ("(-y)^2", "(-y)^2"),
            ("y*(-2)", "y*(-2)"),
            ("y+(-z)", "y+(-z)"),
            ("exp(-alpha*z)/(y+delta)^2", "exp(-alpha*z)/(y+delta)^2"),
            ("y^(-1/2)", "y^(-1/2)"),
        ] {
            assert_eq!(parse(src).unwrap().to_string(), want, "{src}");
        }
    }

    #[test]
    fn latex_uses_greek_and_fractions() {
        let e = parse("alpha*y/(2*y+z) + sqrt(y)").unwrap();
        assert_eq!(to_latex(&e), "\\frac{\\alpha y}{2 y + z} + \\sqrt{y}");
        assert_eq!(to_latex(&parse("exp(-nu*z)").unwrap()), "e^{-\\nu z}");
    }
}
