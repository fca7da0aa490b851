//! Sparse multivariate polynomials over an exact coefficient ring.

use crate::algebra::{parse_rational, rational_text, Ring};
use crate::error::{Error, Result};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

/// Exponent vector with trailing zeros trimmed.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(mut exps: Vec<u32>) -> Self {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        Monomial(exps)
    }

    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        let mut e = vec![0; i + 1];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exp(&self, i: usize) -> u32 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Isobaric weight with `weight(p_i) = i + 1`.
    pub fn weight(&self) -> u32 {
        self.0.iter().enumerate().map(|(i, &e)| (i as u32 + 1) * e).sum()
    }

    /// Highest variable index with nonzero exponent, plus one.
    pub fn support_len(&self) -> usize {
        self.0.len()
    }

    pub fn padded(&self, n: usize) -> Vec<u32> {
        let mut v = self.0.clone();
        v.resize(n.max(v.len()), 0);
        v
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        Monomial::new((0..n).map(|i| self.exp(i) + other.exp(i)).collect())
    }
}

/// Degree first, then the reverse-lexicographic order read from the
/// highest-index variable down: `α ≺ β` when the exponents agree above
/// position `m` and `α_m < β_m`.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let n = self.0.len().max(other.0.len());
            for i in (0..n).rev() {
                match self.exp(i).cmp(&other.exp(i)) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial with named variables. Zero coefficients are never
/// stored.
///
/// Polynomials built by [`Zero::zero`] or [`One::one`] carry no variable
/// names and adopt those of the other operand in arithmetic.
#[derive(Clone, Debug)]
pub struct MultiPoly<C> {
    vars: Arc<Vec<String>>,
    terms: BTreeMap<Monomial, C>,
}

impl<C: PartialEq> PartialEq for MultiPoly<C> {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

/// `p1, …, pn`.
pub fn momentum_names(n: usize) -> Arc<Vec<String>> {
    Arc::new((1..=n).map(|i| format!("p{i}")).collect())
}

impl<C: Ring> MultiPoly<C> {
    pub fn zero_in(vars: Arc<Vec<String>>) -> Self {
        MultiPoly { vars, terms: BTreeMap::new() }
    }

    pub fn constant_in(vars: Arc<Vec<String>>, c: C) -> Self {
        let mut p = Self::zero_in(vars);
        p.add_term(Monomial::one(), c);
        p
    }

    /// The variable with index `i`.
    pub fn var(vars: Arc<Vec<String>>, i: usize) -> Result<Self> {
        if i >= vars.len() {
            return Err(Error::UnknownVariable { index: i, nvars: vars.len() });
        }
        let mut p = Self::zero_in(vars);
        p.add_term(Monomial::var(i), C::one());
        Ok(p)
    }

    pub fn from_terms(vars: Arc<Vec<String>>, terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero_in(vars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn vars(&self) -> &Arc<Vec<String>> {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn with_vars(mut self, vars: Arc<Vec<String>>) -> Self {
        self.vars = vars;
        self
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&m) {
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.terms.insert(m, s);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut d = self.terms.keys().map(|m| m.degree());
        match d.next() {
            Some(first) => d.all(|x| x == first),
            None => true,
        }
    }

    /// Degree in variable `i`.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.exp(i)).max().unwrap_or(0)
    }

    /// Indices of variables that occur.
    pub fn support(&self) -> Vec<usize> {
        let n = self.terms.keys().map(|m| m.support_len()).max().unwrap_or(0);
        (0..n).filter(|&i| self.degree_in(i) > 0).collect()
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms(self.vars.clone(), self.terms.iter().map(|(m, a)| (m.clone(), a.clone() * c.clone())))
    }

    pub fn mul_monomial(&self, mono: &Monomial, c: &C) -> Self {
        Self::from_terms(self.vars.clone(), self.terms.iter().map(|(m, a)| (m.mul(mono), a.clone() * c.clone())))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant_in(self.vars.clone(), C::one());
        for _ in 0..e {
            out = out * self.clone();
        }
        out
    }

    pub fn map_coeffs<D: Ring>(&self, f: impl Fn(&C) -> D) -> MultiPoly<D> {
        MultiPoly::from_terms(self.vars.clone(), self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    /// Partial derivative in variable `i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero_in(self.vars.clone());
        for (m, c) in &self.terms {
            let e = m.exp(i);
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[i] -= 1;
            let mut k = C::zero();
            for _ in 0..e {
                k = k + C::one();
            }
            out.add_term(Monomial::new(exps), c.clone() * k);
        }
        out
    }

    /// Substitute `images[i]` for variable `i`. Variables past the end of
    /// `images` are left alone.
    pub fn substitute(&self, images: &[MultiPoly<C>]) -> Self {
        let vars = images.first().map(|p| p.vars.clone()).unwrap_or_else(|| self.vars.clone());
        let mut out = Self::zero_in(vars.clone());
        let mut powers: Vec<Vec<MultiPoly<C>>> = vec![Vec::new(); images.len()];
        for (m, c) in &self.terms {
            let mut term = Self::constant_in(vars.clone(), c.clone());
            let mut rest = Vec::new();
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if i < images.len() {
                    let cache = &mut powers[i];
                    while cache.len() <= e as usize {
                        let next = match cache.last() {
                            None => Self::constant_in(vars.clone(), C::one()),
                            Some(last) => last.clone() * images[i].clone(),
                        };
                        cache.push(next);
                    }
                    term = term * cache[e as usize].clone();
                } else {
                    rest.resize(i + 1, 0);
                    rest[i] = e;
                }
            }
            if !rest.is_empty() {
                term = term.mul_monomial(&Monomial::new(rest), &C::one());
            }
            out = out + term;
        }
        out
    }

    fn merged_vars(&self, other: &Self) -> Arc<Vec<String>> {
        if self.vars.len() >= other.vars.len() {
            self.vars.clone()
        } else {
            other.vars.clone()
        }
    }

    fn mono_text(&self, m: &Monomial) -> String {
        let mut parts = Vec::new();
        for (i, &e) in m.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let name = self.vars.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1));
            if e == 1 {
                parts.push(name);
            } else {
                parts.push(format!("{name}^{e}"));
            }
        }
        parts.join("*")
    }
}

impl<C: Ring> Zero for MultiPoly<C> {
    fn zero() -> Self {
        Self::zero_in(Arc::new(Vec::new()))
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl<C: Ring> One for MultiPoly<C> {
    fn one() -> Self {
        Self::constant_in(Arc::new(Vec::new()), C::one())
    }
}

impl<C: Ring> Add for MultiPoly<C> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let vars = self.merged_vars(&rhs);
        let (mut big, small) = if self.terms.len() >= rhs.terms.len() { (self, rhs) } else { (rhs, self) };
        for (m, c) in small.terms {
            big.add_term(m, c);
        }
        big.vars = vars;
        big
    }
}

impl<C: Ring> Neg for MultiPoly<C> {
    type Output = Self;
    fn neg(self) -> Self {
        MultiPoly { vars: self.vars, terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl<C: Ring> Sub for MultiPoly<C> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<C: Ring> Mul for MultiPoly<C> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero_in(self.merged_vars(&rhs));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        out
    }
}

/// Terms in decreasing monomial order. Coefficients that are not plain
/// numbers are parenthesised.
impl<C: Ring> fmt::Display for MultiPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let mut cs = c.to_string();
            let simple = !cs.trim_start_matches('-').contains([' ', '+', '-', '*', '(']);
            let negative = simple && cs.starts_with('-');
            if negative {
                cs.remove(0);
            }
            let sep = match (idx, negative) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            let ms = self.mono_text(m);
            let body = match (ms.is_empty(), cs.as_str()) {
                (true, _) => if simple { cs } else { format!("({cs})") },
                (false, "1") => ms,
                (false, _) if simple => format!("{cs}*{ms}"),
                (false, _) => format!("({cs})*{ms}"),
            };
            write!(f, "{sep}{body}")?;
        }
        Ok(())
    }
}

pub type RatPoly = MultiPoly<BigRational>;

impl RatPoly {
    /// Parse the canonical text form over the given variables.
    pub fn parse(text: &str, vars: Arc<Vec<String>>) -> Result<Self> {
        let bad = |s: &str| Error::InvalidInput(format!("cannot parse polynomial term `{s}`"));
        let mut out = Self::zero_in(vars.clone());
        let t = text.trim();
        if t == "0" {
            return Ok(out);
        }
        // Split on top-level signs.
        let mut pieces: Vec<(bool, String)> = Vec::new();
        let mut cur = String::new();
        let mut neg = false;
        for (i, ch) in t.char_indices() {
            if (ch == '+' || ch == '-') && i > 0 && !cur.trim_end().ends_with(['^', '/', '*']) && !cur.trim().is_empty() {
                pieces.push((neg, std::mem::take(&mut cur)));
                neg = ch == '-';
            } else if (ch == '+' || ch == '-') && cur.trim().is_empty() {
                neg ^= ch == '-';
            } else {
                cur.push(ch);
            }
        }
        pieces.push((neg, cur));
        for (neg, piece) in pieces {
            let piece = piece.trim();
            let mut coeff = BigRational::one();
            let mut exps = vec![0u32; vars.len()];
            for factor in piece.split('*') {
                let factor = factor.trim();
                if factor.is_empty() {
                    return Err(bad(piece));
                }
                if let Some(q) = parse_rational(factor) {
                    coeff *= q;
                    continue;
                }
                let (name, e) = match factor.split_once('^') {
                    Some((n, e)) => (n, e.parse::<u32>().map_err(|_| bad(piece))?),
                    None => (factor, 1),
                };
                let idx = vars.iter().position(|v| v == name).ok_or_else(|| bad(piece))?;
                exps[idx] += e;
            }
            if neg {
                coeff = -coeff;
            }
            out.add_term(Monomial::new(exps), coeff);
        }
        Ok(out)
    }

    /// Canonical text: decreasing monomial order, coefficients as `a/b`.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        if self.terms.is_empty() {
            return "0".into();
        }
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            let sep = match (idx, neg) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            let ms = self.mono_text(m);
            let body = if ms.is_empty() {
                rational_text(&a)
            } else if a.is_one() {
                ms
            } else {
                format!("{}*{ms}", rational_text(&a))
            };
            s.push_str(sep);
            s.push_str(&body);
        }
        s
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        CompiledPoly::new(self).eval(x)
    }
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    vars: Vec<String>,
    /// `(exponents, "a/b")`, exponents padded to the variable count.
    terms: Vec<(Vec<u32>, String)>,
    text: String,
}

impl Serialize for RatPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.vars.len();
        PolyJson {
            vars: self.vars.as_ref().clone(),
            terms: self.terms.iter().rev().map(|(m, c)| (m.padded(n), rational_text(c))).collect(),
            text: self.canonical_text(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = PolyJson::deserialize(d)?;
        let vars = Arc::new(j.vars);
        let mut p = RatPoly::zero_in(vars.clone());
        for (e, c) in j.terms {
            if e.len() != vars.len() {
                return Err(D::Error::custom("exponent vector length differs from variable count"));
            }
            let c = parse_rational(&c).ok_or_else(|| D::Error::custom(format!("bad coefficient {c}")))?;
            p.add_term(Monomial::new(e), c);
        }
        Ok(p)
    }
}

/// Floating-point form of a rational polynomial for fast evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledPoly {
    terms: Vec<(Vec<u32>, f64)>,
    nvars: usize,
}

impl CompiledPoly {
    pub fn new(p: &RatPoly) -> Self {
        let nvars = p.nvars().max(p.terms.keys().map(|m| m.support_len()).max().unwrap_or(0));
        let terms = p.terms.iter().map(|(m, c)| (m.padded(nvars), crate::algebra::rational_to_f64(c))).collect();
        CompiledPoly { terms, nvars }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Value and gradient.
    pub fn eval_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut v = 0.0;
        for (e, c) in &self.terms {
            let mut prod = *c;
            for (&k, &xi) in e.iter().zip(x) {
                prod *= xi.powi(k as i32);
            }
            v += prod;
            for i in 0..self.nvars {
                let k = e[i];
                if k == 0 {
                    continue;
                }
                let mut d = c * k as f64 * x[i].powi(k as i32 - 1);
                for (j, (&kj, &xj)) in e.iter().zip(x).enumerate() {
                    if j != i {
                        d *= xj.powi(kj as i32);
                    }
                }
                grad[i] += d;
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    fn vars(n: usize) -> Arc<Vec<String>> {
        momentum_names(n)
    }

    #[test]
    fn order_reads_from_highest_variable() {
        // same degree: p1^2*p4 ≻ p1*p2*p3 ≻ p2^3
        let a = Monomial::new(vec![2, 0, 0, 1]);
        let b = Monomial::new(vec![1, 1, 1]);
        let c = Monomial::new(vec![0, 3]);
        assert!(a > b && b > c);
        assert!(Monomial::new(vec![0, 0, 1]) < Monomial::new(vec![2]));
    }

    #[test]
    fn text_round_trip() {
        let v = vars(5);
        let p = RatPoly::parse("p2^4 - 4*p1^3*p5 - 4*p1*p2^2*p3 + 2*p1^2*p3^2 + 4*p1^2*p2*p4", v.clone()).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(RatPoly::parse(&p.canonical_text(), v.clone()).unwrap(), p);
        assert_eq!(p.canonical_text(), "-4*p1^3*p5 + 4*p1^2*p2*p4 + 2*p1^2*p3^2 - 4*p1*p2^2*p3 + p2^4");
        let q = RatPoly::parse("-1/2*p1 + 3", v.clone()).unwrap();
        assert_eq!(q.coeff(&Monomial::var(0)), rat(-1, 2));
        assert_eq!(q.canonical_text(), "-1/2*p1 + 3");
    }

    #[test]
    fn json_round_trip() {
        let v = vars(3);
        let p = RatPoly::parse("p2^2 - 2*p1*p3 + 5/7", v).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: RatPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn substitution_and_derivative() {
        let v = vars(2);
        let p1 = RatPoly::var(v.clone(), 0).unwrap();
        let p2 = RatPoly::var(v.clone(), 1).unwrap();
        let f = p1.clone() * p2.clone() + p2.pow(2);
        let g = f.substitute(&[p1.clone() + p2.clone(), p2.clone()]);
        assert_eq!(g, RatPoly::parse("p1*p2 + 2*p2^2", v.clone()).unwrap());
        assert_eq!(f.derivative(1), RatPoly::parse("p1 + 2*p2", v.clone()).unwrap());
        assert!(RatPoly::var(v, 2).is_err());
    }

    #[test]
    fn compiled_gradient() {
        let v = vars(2);
        let f = RatPoly::parse("3*p1^2*p2 - p2^3", v).unwrap();
        let c = CompiledPoly::new(&f);
        let mut g = [0.0; 2];
        let val = c.eval_grad(&[2.0, -1.0], &mut g);
        assert_eq!(val, -12.0 + 1.0);
        assert_eq!(g, [-12.0, 12.0 - 3.0]);
    }
}
