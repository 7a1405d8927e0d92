//! Recursive-descent parser for the expression grammar.
//!
//! Precedence from loosest to tightest: `+ -`, `* /`, unary minus, `^`.
//! Exponentiation is right associative and its exponent must reduce to a
//! rational constant built from literals only.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::{Expr, Func, Node, Rational, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnknownFunction(String),
    NonRationalExponent,
    BadNumber(String),
}

/// Parse failure with the 1-based column it was detected at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub column: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => {
                write!(f, "unexpected character '{c}' at column {}", self.column)
            }
            ParseErrorKind::UnexpectedToken(t) => {
                write!(f, "unexpected '{t}' at column {}", self.column)
            }
            ParseErrorKind::UnexpectedEnd => {
                write!(f, "unexpected end of input at column {}", self.column)
            }
            ParseErrorKind::UnknownFunction(name) => {
                write!(f, "unknown function '{name}' at column {}", self.column)
            }
            ParseErrorKind::NonRationalExponent => write!(
                f,
                "exponent at column {} is not a rational constant",
                self.column
            ),
            ParseErrorKind::BadNumber(s) => {
                write!(f, "malformed number '{s}' at column {}", self.column)
            }
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(r) => r.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Op(c) => c.to_string(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = decimal(&text).ok_or(ParseError {
                kind: ParseErrorKind::BadNumber(text.clone()),
                column,
            })?;
            out.push((Tok::Num(value), column));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), column));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnexpectedChar(c),
                        column,
                    })
                }
            };
            out.push((tok, column));
            i += 1;
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

fn decimal(text: &str) -> Option<Rational> {
    let (int_part, frac_part) = text.split_once('.').unwrap_or((text, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow::pow(BigInt::from(10), frac_part.len());
    Some(Rational::new(num, den))
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        let kind = match self.peek() {
            Tok::End => ParseErrorKind::UnexpectedEnd,
            t => ParseErrorKind::UnexpectedToken(t.describe()),
        };
        ParseError {
            kind,
            column: self.column(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        while let Tok::Op(op @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::raw(if op == '+' {
                Node::Add(lhs, rhs)
            } else {
                Node::Sub(lhs, rhs)
            });
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(op @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::raw(Node::Mul(lhs, rhs))
            } else {
                match (lhs.node(), rhs.node()) {
                    (Node::Const(a), Node::Const(b)) if !b.is_zero() => Expr::constant(a / b),
                    _ => Expr::raw(Node::Div(lhs, rhs)),
                }
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            let inner = self.unary()?;
            return Ok(match inner.node() {
                Node::Const(c) => Expr::constant(-c.clone()),
                _ => Expr::raw(Node::Neg(inner)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let column = self.column();
        let exponent = self.unary()?;
        let r = literal_value(&exponent).ok_or(ParseError {
            kind: ParseErrorKind::NonRationalExponent,
            column,
        })?;
        Ok(Expr::raw(Node::Pow(base, r)))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let column = self.column();
        match self.peek().clone() {
            Tok::Num(r) => {
                self.bump();
                Ok(Expr::constant(r))
            }
            Tok::LParen => {
                self.bump();
                let e = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let func = Func::from_name(&name).ok_or(ParseError {
                        kind: ParseErrorKind::UnknownFunction(name.clone()),
                        column,
                    })?;
                    self.bump();
                    let arg = self.sum()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::raw(Node::Func(func, arg)));
                }
                match name.as_str() {
                    "z" => Ok(Expr::var(Var::Z)),
                    "y" => Ok(Expr::var(Var::Y)),
                    _ if Func::from_name(&name).is_some() => Err(self.unexpected()),
                    _ => Ok(Expr::param(&name)),
                }
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Value of an expression made only of literals and arithmetic.
fn literal_value(e: &Expr) -> Option<Rational> {
    match e.node() {
        Node::Const(c) => Some(c.clone()),
        Node::Neg(a) => literal_value(a).map(|v| -v),
        Node::Add(a, b) => Some(literal_value(a)? + literal_value(b)?),
        Node::Sub(a, b) => Some(literal_value(a)? - literal_value(b)?),
        Node::Mul(a, b) => Some(literal_value(a)? * literal_value(b)?),
        Node::Div(a, b) => {
            let d = literal_value(b)?;
            if d.is_zero() {
                None
            } else {
                Some(literal_value(a)? / d)
            }
        }
        Node::Pow(a, r) if r.is_integer() => {
            let base = literal_value(a)?;
            let k = r.to_integer().to_i32()?;
            if base.is_zero() && k < 0 || k.unsigned_abs() > 64 {
                return None;
            }
            Some(num_traits::pow::Pow::pow(&base, k))
        }
        _ => None,
    }
}

/// Parses an expression in the variables `z`, `y` and free parameters.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected());
    }
    Ok(e)
}
