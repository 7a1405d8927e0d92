//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Monomials are exponent vectors indexed by a symbol table and stored with
//! trailing zeros trimmed, so `Vec` ordering is the lexicographic monomial
//! order. That order is all exact division needs.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::Rational;

pub(super) type Mono = Vec<u32>;

fn trim(mut m: Mono) -> Mono {
    while m.last() == Some(&0) {
        m.pop();
    }
    m
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0))
        .collect();
    trim(out)
}

fn mono_div(a: &Mono, b: &Mono) -> Option<Mono> {
    if b.len() > a.len() {
        return None;
    }
    let mut out = a.clone();
    for (i, e) in b.iter().enumerate() {
        out[i] = out[i].checked_sub(*e)?;
    }
    Some(trim(out))
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub(super) struct Poly {
    pub terms: BTreeMap<Mono, Rational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn one() -> Poly {
        Poly::constant(Rational::one())
    }

    pub fn var(i: usize) -> Poly {
        let mut m = vec![0; i + 1];
        m[i] = 1;
        let mut p = Poly::zero();
        p.terms.insert(m, Rational::one());
        p
    }

    pub fn monomial(m: Mono, c: Rational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(trim(m), c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    /// True when no monomial involves any symbol whose index satisfies `pred`.
    pub fn free_of(&self, pred: impl Fn(usize) -> bool) -> bool {
        self.terms
            .keys()
            .all(|m| m.iter().enumerate().all(|(i, e)| *e == 0 || !pred(i)))
    }

    fn add_term(&mut self, m: Mono, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(mono_mul(ma, mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                out = out.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    pub fn leading(&self) -> Option<(&Mono, &Rational)> {
        self.terms.iter().next_back()
    }

    /// Divides by the leading coefficient, returning it with the monic result.
    pub fn monic(&self) -> (Rational, Poly) {
        match self.leading() {
            Some((_, c)) => {
                let c = c.clone();
                (c.clone(), self.scale(&c.recip()))
            }
            None => (Rational::zero(), Poly::zero()),
        }
    }

    /// Greatest monomial dividing every term.
    pub fn mono_content(&self) -> Mono {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Vec::new();
        };
        let mut m = first.clone();
        for k in it {
            for (i, e) in m.iter_mut().enumerate() {
                *e = (*e).min(k.get(i).copied().unwrap_or(0));
            }
        }
        trim(m)
    }

    pub fn div_mono(&self, m: &Mono) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (mono_div(k, m).expect("monomial content divides"), c.clone()))
                .collect(),
        }
    }

    /// Quotient when `d` divides `self` exactly, `None` otherwise or when the
    /// work budget runs out.
    pub fn exact_div(&self, d: &Poly, budget: &mut usize) -> Option<Poly> {
        let (dm, dc) = d.leading()?;
        let (dm, dc) = (dm.clone(), dc.clone());
        let mut r = self.clone();
        let mut q = Poly::zero();
        while let Some((rm, rc)) = r.leading() {
            let step = d.len();
            if *budget < step {
                *budget = 0;
                return None;
            }
            *budget -= step;
            let tm = mono_div(rm, &dm)?;
            let tc = rc / &dc;
            for (m, c) in &d.terms {
                r.add_term(mono_mul(m, &tm), -(c * &tc));
            }
            q.add_term(tm, tc);
        }
        Some(q)
    }

    /// Antiderivative in symbol `i` with zero constant term.
    pub fn integrate(&self, i: usize) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut m2 = m.clone();
            if m2.len() <= i {
                m2.resize(i + 1, 0);
            }
            m2[i] += 1;
            let k = Rational::from_integer(m2[i].into());
            out.add_term(trim(m2), c / k);
        }
        out
    }

    /// Substitutes a constant for symbol `i`.
    pub fn eval_at(&self, i: usize, v: &Rational) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.get(i).copied().unwrap_or(0);
            let mut m2 = m.clone();
            if e > 0 {
                m2[i] = 0;
            }
            let factor = num_traits::pow::Pow::pow(v, e);
            out.add_term(trim(m2), c * factor);
        }
        out
    }

    /// Exact square root with positive leading coefficient, when `self` is
    /// the square of a polynomial with rational coefficients.
    pub fn sqrt(&self) -> Option<Poly> {
        let Some((m, c)) = self.leading() else {
            return Some(Poly::zero());
        };
        if m.iter().any(|e| e % 2 == 1) {
            return None;
        }
        let lead_m: Mono = m.iter().map(|e| e / 2).collect();
        let lead_c = rational_sqrt(c)?;
        let mut s = Poly::monomial(lead_m.clone(), lead_c.clone());
        let twice = &lead_c + &lead_c;
        // Each round fixes the leading term of the remainder, and there
        // are never more rounds than terms in the square.
        for _ in 0..=self.len() {
            let r = self.sub(&s.mul(&s));
            let Some((rm, rc)) = r.leading() else {
                return Some(s);
            };
            let mut qm = Vec::with_capacity(rm.len().max(lead_m.len()));
            for i in 0..rm.len().max(lead_m.len()) {
                let a = rm.get(i).copied().unwrap_or(0);
                let b = lead_m.get(i).copied().unwrap_or(0);
                qm.push(a.checked_sub(b)?);
            }
            s = s.add(&Poly::monomial(qm, rc / &twice));
        }
        None
    }
}

fn rational_sqrt(c: &Rational) -> Option<Rational> {
    if c.is_negative() {
        return None;
    }
    let (n, d) = (c.numer().sqrt(), c.denom().sqrt());
    (Rational::new(&n * &n, &d * &d) == *c).then(|| Rational::new(n, d))
}
