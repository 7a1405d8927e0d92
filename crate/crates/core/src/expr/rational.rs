//! Canonical forms for rational expressions.
//!
//! An expression is converted to a numerator polynomial over a factored
//! denominator. Denominator factors are kept monic and collected in a
//! per-conversion registry; every new denominator is trial-divided by the
//! registered factors and whatever remains becomes a new factor. Cancellation
//! is exact multivariate division, so `x^2/x` and `(y^2-1)/(y-1)` reduce.
//!
//! When transcendental subterms are admitted they become opaque symbols
//! whose arguments are themselves canonicalized first. This is what lets
//! the generated integrating factors cancel against one another.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::Poly;
use super::{Expr, Func, Node, Rational, Var};

/// Limit on term operations spent in one conversion.
const BUDGET: usize = 2_000_000;
/// Largest number of terms allowed in any intermediate polynomial.
const MAX_TERMS: usize = 4_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fail {
    NonRational,
    Budget,
    DivByZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Param,
    Z,
    Y,
    Atom,
}

#[derive(Clone, Debug)]
struct RatFn {
    num: Poly,
    den: Vec<(usize, u32)>,
}

struct Ctx {
    symbols: Vec<Expr>,
    kinds: Vec<Kind>,
    index: HashMap<Expr, usize>,
    factors: Vec<Poly>,
    allow_atoms: bool,
    used_atoms: bool,
    budget: usize,
    memo: HashMap<usize, RatFn>,
}

type R<T> = Result<T, Fail>;

impl Ctx {
    fn new(allow_atoms: bool) -> Ctx {
        let mut c = Ctx {
            symbols: Vec::new(),
            kinds: Vec::new(),
            index: HashMap::new(),
            factors: Vec::new(),
            allow_atoms,
            used_atoms: false,
            budget: BUDGET,
            memo: HashMap::new(),
        };
        c.symbol(Expr::z(), Kind::Z);
        c.symbol(Expr::y(), Kind::Y);
        c
    }

    fn symbol(&mut self, e: Expr, kind: Kind) -> usize {
        if let Some(&i) = self.index.get(&e) {
            return i;
        }
        self.symbols.push(e.clone());
        self.kinds.push(kind);
        self.index.insert(e, self.symbols.len() - 1);
        self.symbols.len() - 1
    }

    fn charge(&mut self, p: &Poly) -> R<()> {
        if p.len() > MAX_TERMS || self.budget < p.len() {
            return Err(Fail::Budget);
        }
        self.budget -= p.len();
        Ok(())
    }

    fn poly(&mut self, p: Poly) -> R<RatFn> {
        self.charge(&p)?;
        Ok(RatFn {
            num: p,
            den: Vec::new(),
        })
    }

    fn factor_poly(&self, f: usize) -> &Poly {
        &self.factors[f]
    }

    fn expand_den(&mut self, den: &[(usize, u32)]) -> R<Poly> {
        let mut out = Poly::one();
        for &(f, e) in den {
            out = out.mul(&self.factors[f].pow(e));
            self.charge(&out)?;
        }
        Ok(out)
    }

    /// Factor index of a monic polynomial, registering it when new.
    fn register(&mut self, p: Poly) -> usize {
        if let Some(i) = self.factors.iter().position(|q| *q == p) {
            i
        } else {
            self.factors.push(p);
            self.factors.len() - 1
        }
    }

    /// Splits a nonzero polynomial into a constant and registered factors.
    fn split(&mut self, p: &Poly) -> R<(Rational, Vec<(usize, u32)>)> {
        let (c, mut p) = p.monic();
        let mut out: Vec<(usize, u32)> = Vec::new();
        let content = p.mono_content();
        if !content.is_empty() {
            p = p.div_mono(&content);
            for (i, e) in content.iter().enumerate() {
                if *e > 0 {
                    let f = self.register(Poly::var(i));
                    out.push((f, *e));
                }
            }
        }
        let mut i = 0;
        while i < self.factors.len() && p.as_constant().is_none() {
            let q = self.factors[i].clone();
            if q.len() > 1 {
                let mut count = 0;
                while let Some(r) = p.exact_div(&q, &mut self.budget) {
                    p = r;
                    count += 1;
                    if p.as_constant().is_some() {
                        break;
                    }
                }
                if count > 0 {
                    out.push((i, count));
                }
            }
            if self.budget == 0 {
                return Err(Fail::Budget);
            }
            i += 1;
        }
        let mut c = c;
        if p.as_constant().is_none() {
            // Squares show up whenever a denominator was expanded before
            // it reached us; splitting the root keeps the factors small.
            if let Some(root) = p.sqrt() {
                let (rc, inner) = self.split(&root)?;
                c = c * &rc * &rc;
                let doubled: Vec<(usize, u32)> = inner.iter().map(|&(f, e)| (f, 2 * e)).collect();
                out = Ctx::merge_den(&out, &doubled, true);
            } else {
                let f = self.register(p);
                out.push((f, 1));
            }
        }
        out.sort();
        Ok((c, out))
    }

    fn reduce(&mut self, mut r: RatFn) -> R<RatFn> {
        if r.num.is_zero() {
            r.den.clear();
            return Ok(r);
        }
        for entry in r.den.iter_mut() {
            let q = self.factors[entry.0].clone();
            while entry.1 > 0 {
                match r.num.exact_div(&q, &mut self.budget) {
                    Some(n) => {
                        r.num = n;
                        entry.1 -= 1;
                    }
                    None => break,
                }
            }
        }
        if self.budget == 0 {
            return Err(Fail::Budget);
        }
        r.den.retain(|(_, e)| *e > 0);
        self.charge(&r.num)?;
        Ok(r)
    }

    fn merge_den(a: &[(usize, u32)], b: &[(usize, u32)], add: bool) -> Vec<(usize, u32)> {
        let mut map: std::collections::BTreeMap<usize, u32> = a.iter().copied().collect();
        for &(f, e) in b {
            let slot = map.entry(f).or_insert(0);
            *slot = if add { *slot + e } else { (*slot).max(e) };
        }
        map.into_iter().collect()
    }

    fn cofactor(&mut self, own: &[(usize, u32)], common: &[(usize, u32)]) -> R<Poly> {
        let missing: Vec<(usize, u32)> = common
            .iter()
            .filter_map(|&(f, e)| {
                let have = own.iter().find(|(g, _)| *g == f).map_or(0, |(_, k)| *k);
                (e > have).then_some((f, e - have))
            })
            .collect();
        self.expand_den(&missing)
    }

    fn add(&mut self, a: &RatFn, b: &RatFn, negate_b: bool) -> R<RatFn> {
        let den = Ctx::merge_den(&a.den, &b.den, false);
        let ca = self.cofactor(&a.den, &den)?;
        let cb = self.cofactor(&b.den, &den)?;
        let na = a.num.mul(&ca);
        let nb = b.num.mul(&cb);
        let num = if negate_b { na.sub(&nb) } else { na.add(&nb) };
        self.charge(&num)?;
        self.reduce(RatFn { num, den })
    }

    fn mul(&mut self, a: &RatFn, b: &RatFn) -> R<RatFn> {
        let num = a.num.mul(&b.num);
        self.charge(&num)?;
        let den = Ctx::merge_den(&a.den, &b.den, true);
        self.reduce(RatFn { num, den })
    }

    fn inv(&mut self, a: &RatFn) -> R<RatFn> {
        if a.num.is_zero() {
            return Err(Fail::DivByZero);
        }
        let (c, factors) = self.split(&a.num)?;
        let num = self.expand_den(&a.den)?.scale(&c.recip());
        self.reduce(RatFn { num, den: factors })
    }

    fn pow(&mut self, a: &RatFn, k: i64) -> R<RatFn> {
        if k < 0 {
            let inv = self.inv(a)?;
            return self.pow(&inv, -k);
        }
        let k = u32::try_from(k).map_err(|_| Fail::Budget)?;
        if k > 64 {
            return Err(Fail::Budget);
        }
        let num = a.num.pow(k);
        self.charge(&num)?;
        Ok(RatFn {
            num,
            den: a.den.iter().map(|&(f, e)| (f, e * k)).collect(),
        })
    }

    fn atom(&mut self, e: Expr) -> R<RatFn> {
        if !self.allow_atoms {
            return Err(Fail::NonRational);
        }
        self.used_atoms = true;
        let i = self.symbol(e, Kind::Atom);
        self.poly(Poly::var(i))
    }

    fn convert(&mut self, e: &Expr) -> R<RatFn> {
        let key = Arc::as_ptr(&e.0) as usize;
        if let Some(r) = self.memo.get(&key) {
            return Ok(r.clone());
        }
        let out = match e.node() {
            Node::Const(c) => self.poly(Poly::constant(c.clone()))?,
            Node::Var(Var::Z) => self.poly(Poly::var(0))?,
            Node::Var(Var::Y) => self.poly(Poly::var(1))?,
            Node::Param(_) => {
                let i = self.symbol(e.clone(), Kind::Param);
                self.poly(Poly::var(i))?
            }
            Node::Neg(a) => {
                let a = self.convert(a)?;
                RatFn {
                    num: a.num.neg(),
                    den: a.den,
                }
            }
            Node::Add(a, b) | Node::Sub(a, b) => {
                let ra = self.convert(a)?;
                let rb = self.convert(b)?;
                self.add(&ra, &rb, matches!(e.node(), Node::Sub(..)))?
            }
            Node::Mul(a, b) => {
                let ra = self.convert(a)?;
                let rb = self.convert(b)?;
                self.mul(&ra, &rb)?
            }
            Node::Div(a, b) => {
                let ra = self.convert(a)?;
                let rb = self.convert(b)?;
                let inv = self.inv(&rb)?;
                self.mul(&ra, &inv)?
            }
            Node::Pow(a, r) => {
                let ra = self.convert(a)?;
                if r.is_integer() {
                    let k = r.to_integer().to_i64().ok_or(Fail::Budget)?;
                    self.pow(&ra, k)?
                } else {
                    // a^(k+s) = a^k * a^s with 0 < s < 1 kept opaque.
                    let k = r.floor();
                    let s = r - &k;
                    let base = self.render(&ra, true);
                    let atom = self.atom(Expr::raw(Node::Pow(base, s)))?;
                    let k = k.to_integer().to_i64().ok_or(Fail::Budget)?;
                    let whole = self.pow(&ra, k)?;
                    self.mul(&whole, &atom)?
                }
            }
            Node::Func(f, a) => {
                if !self.allow_atoms {
                    return Err(Fail::NonRational);
                }
                let ra = self.convert(a)?;
                let arg = self.render(&ra, true);
                match (f, arg.as_const()) {
                    (Func::Exp, Some(c)) if c.is_zero() => self.poly(Poly::one())?,
                    (Func::Ln, Some(c)) if c.is_one() => self.poly(Poly::zero())?,
                    _ => self.atom(Expr::func(*f, &arg))?,
                }
            }
        };
        self.memo.insert(key, out.clone());
        Ok(out)
    }

    /// Sort key placing parameters first, then `z`, `y`, then atoms.
    fn symbol_rank(&self, i: usize) -> (Kind, String) {
        (self.kinds[i], self.symbols[i].to_string())
    }

    /// `c * x1^e1 * x2^e2 * ...` built left to right so it prints flat.
    fn term_expr(&self, c: &Rational, m: &[u32]) -> Expr {
        let mut idx: Vec<usize> = (0..m.len()).filter(|&i| m[i] > 0).collect();
        idx.sort_by_key(|&i| self.symbol_rank(i));
        idx.iter().fold(Expr::constant(c.clone()), |acc, &i| {
            acc.mul(&self.symbols[i].powi(i64::from(m[i])))
        })
    }

    fn poly_expr(&self, p: &Poly) -> Expr {
        let mut terms: Vec<(&Vec<u32>, &Rational)> = p.terms.iter().collect();
        // Highest total degree first; ties keep a fixed symbol order.
        terms.sort_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| {
                let ka: Vec<(Kind, String, u32)> = self.mono_key(a);
                let kb: Vec<(Kind, String, u32)> = self.mono_key(b);
                kb.cmp(&ka)
            })
        });
        let mut out: Option<Expr> = None;
        for (m, c) in terms {
            let mag = self.term_expr(&c.abs(), m);
            out = Some(match out {
                None if c.is_negative() => mag.neg(),
                None => mag,
                Some(acc) if c.is_negative() => acc.sub(&mag),
                Some(acc) => acc.add(&mag),
            });
        }
        out.unwrap_or_else(Expr::zero)
    }

    fn mono_key(&self, m: &[u32]) -> Vec<(Kind, String, u32)> {
        let mut k: Vec<(Kind, String, u32)> = (0..m.len())
            .filter(|&i| m[i] > 0)
            .map(|i| {
                let (kind, name) = self.symbol_rank(i);
                (kind, name, m[i])
            })
            .collect();
        k.sort();
        k
    }

    /// Expression for a rational function; the denominator is either kept as
    /// a product of factors or expanded.
    fn render(&self, r: &RatFn, factored: bool) -> Expr {
        let num = self.poly_expr(&r.num);
        if r.den.is_empty() {
            return num;
        }
        let den = if factored {
            let mut den = r.den.clone();
            den.sort_by_key(|&(f, _)| {
                let p = self.factor_poly(f);
                (p.len(), self.poly_expr(p).to_string())
            });
            den.iter().fold(Expr::one(), |acc, &(f, e)| {
                acc.mul(&self.poly_expr(self.factor_poly(f)).powi(i64::from(e)))
            })
        } else {
            let mut p = Poly::one();
            for &(f, e) in &r.den {
                p = p.mul(&self.factor_poly(f).pow(e));
            }
            self.poly_expr(&p)
        };
        num.div(&den)
    }

    fn den_free_of_vars(&self, r: &RatFn) -> bool {
        r.den
            .iter()
            .all(|&(f, _)| self.factor_poly(f).free_of(|i| i < 2))
    }
}

/// Normalizes a rational expression to `p/q` with both sides expanded and
/// common factors cancelled. The flag is false, and the input is returned
/// unchanged, when the expression contains `exp`, `ln`, `sqrt` or a
/// fractional power.
pub fn normalize_rational(e: &Expr) -> (Expr, bool) {
    let mut ctx = Ctx::new(false);
    match ctx.convert(e) {
        Ok(r) => (ctx.render(&r, false), true),
        Err(Fail::NonRational) => (e.clone(), false),
        Err(_) => (e.clone(), true),
    }
}

/// Best-effort tidy form: rational structure is normalized with
/// transcendental subterms treated as symbols, and the result is kept only
/// when it is no larger than the input.
pub fn simplify(e: &Expr) -> Expr {
    let mut ctx = Ctx::new(true);
    match ctx.convert(e) {
        Ok(r) => {
            let out = ctx.render(&r, true);
            if out.size() <= e.size() {
                out
            } else {
                e.clone()
            }
        }
        Err(_) => e.clone(),
    }
}

/// `∫_0^y e dt` for an expression polynomial in `y` whose denominators do
/// not involve `z` or `y`.
pub(crate) fn antiderivative_in_y(e: &Expr) -> Option<Expr> {
    let mut ctx = Ctx::new(false);
    let r = ctx.convert(e).ok()?;
    if !ctx.den_free_of_vars(&r) {
        return None;
    }
    let out = RatFn {
        num: r.num.integrate(1),
        den: r.den,
    };
    Some(ctx.render(&out, true))
}

/// Closed-form potential with `∂y B = by`, `∂z B = bz` and `B(z0, y0) = b0`,
/// available when both partials are polynomial in `z` and `y`. Exactness of
/// the pair is the caller's responsibility.
pub(crate) fn polynomial_potential(
    by: &Expr,
    bz: &Expr,
    z0: &Rational,
    y0: &Rational,
    b0: &Rational,
) -> Option<Expr> {
    let mut ctx = Ctx::new(false);
    let ry = ctx.convert(by).ok()?;
    let rz = ctx.convert(bz).ok()?;
    if !ctx.den_free_of_vars(&ry) || !ctx.den_free_of_vars(&rz) {
        return None;
    }
    let f = ry.num.integrate(1);
    let y_leg = f.sub(&f.eval_at(1, y0));
    let g = rz.num.eval_at(1, y0).integrate(0);
    let z_leg = g.sub(&g.eval_at(0, z0));
    let a = RatFn {
        num: y_leg,
        den: ry.den,
    };
    let b = RatFn {
        num: z_leg,
        den: rz.den,
    };
    let sum = ctx.add(&a, &b, false).ok()?;
    let anchor = RatFn {
        num: Poly::constant(b0.clone()),
        den: Vec::new(),
    };
    let total = ctx.add(&sum, &anchor, false).ok()?;
    Some(ctx.render(&total, true))
}

/// `sqrt(e)` without the radical when `e` is the square of a rational
/// expression, with transcendental subterms treated as symbols. The sign
/// of the result is that of a positive leading coefficient, so callers
/// must still decide which of `±root` is the principal value.
pub(crate) fn sqrt_exact(e: &Expr) -> Option<Expr> {
    let mut ctx = Ctx::new(true);
    let r = ctx.convert(e).ok()?;
    let num = r.num.sqrt()?;
    let mut den = Vec::with_capacity(r.den.len());
    for &(f, k) in &r.den {
        if k % 2 == 1 {
            return None;
        }
        den.push((f, k / 2));
    }
    Some(ctx.render(&RatFn { num, den }, true))
}
