use super::Ring;
use num_traits::{One, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Dense univariate polynomial, coefficients in ascending degree.
///
/// The coefficient vector never ends in a zero; the zero polynomial has an
/// empty vector.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct UniPoly<C> {
    coeffs: Vec<C>,
}

impl<C: Ring> UniPoly<C> {
    pub fn new(mut coeffs: Vec<C>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn constant(c: C) -> Self {
        Self::new(vec![c])
    }

    /// The indeterminate itself.
    pub fn x() -> Self {
        Self::new(vec![C::zero(), C::one()])
    }

    /// `c * x^k`
    pub fn monomial(c: C, k: usize) -> Self {
        let mut v = vec![C::zero(); k + 1];
        v[k] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C {
        self.coeffs.get(k).cloned().unwrap_or_else(C::zero)
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&C> {
        self.coeffs.last()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len().saturating_sub(1));
        let mut k = C::one();
        for c in self.coeffs.iter().skip(1) {
            out.push(c.clone() * k.clone());
            k = k + C::one();
        }
        Self::new(out)
    }

    pub fn eval(&self, x: &C) -> C {
        self.coeffs
            .iter()
            .rev()
            .fold(C::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::new(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = out * self.clone();
        }
        out
    }

    pub fn map<D: Ring>(&self, f: impl Fn(&C) -> D) -> UniPoly<D> {
        UniPoly::new(self.coeffs.iter().map(f).collect())
    }
}

impl<C: Ring + Div<Output = C>> UniPoly<C> {
    /// Euclidean division. Panics on division by zero.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let Some(nd) = self.degree() else {
            return (Self::zero(), Self::zero());
        };
        if nd < dd {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![C::zero(); nd - dd + 1];
        for i in (0..=nd - dd).rev() {
            let c = rem[i + dd].clone() / lead.clone();
            if c.is_zero() {
                continue;
            }
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                rem[i + j] = rem[i + j].clone() - c.clone() * dc.clone();
            }
            quot[i] = c;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => {
                let l = l.clone();
                Self::new(self.coeffs.iter().map(|c| c.clone() / l.clone()).collect())
            }
            None => self.clone(),
        }
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Yun's square-free decomposition: `self = c * prod f_i^i`, returned as
    /// `(i, f_i)` for the non-constant monic factors.
    pub fn square_free(&self) -> Vec<(usize, Self)> {
        let f = self.monic();
        let df = f.derivative();
        let mut a = f.gcd(&df);
        let mut b = f.div_rem(&a).0;
        let mut c = df.div_rem(&a).0;
        let mut d = c - b.derivative();
        let mut out = Vec::new();
        let mut i = 1;
        while !b.is_constant() {
            a = b.gcd(&d);
            if !a.is_constant() {
                out.push((i, a.monic()));
            }
            b = b.div_rem(&a).0;
            c = d.div_rem(&a).0;
            d = c - b.derivative();
            i += 1;
        }
        out
    }
}

impl<C: Ring> Zero for UniPoly<C> {
    fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl<C: Ring> One for UniPoly<C> {
    fn one() -> Self {
        Self::constant(C::one())
    }
}

impl<C: Ring> Add for UniPoly<C> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<C: Ring> Sub for UniPoly<C> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<C: Ring> Neg for UniPoly<C> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(self.coeffs.into_iter().map(|c| -c).collect())
    }
}

impl<C: Ring> Mul for UniPoly<C> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let mut out = vec![C::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }
}

impl<C: Ring> fmt::Display for UniPoly<C> {
    /// Written in the formal parameter `λ`, highest degree first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 if super::is_one(c) => write!(f, "λ")?,
                1 => write!(f, "{c}*λ")?,
                _ if super::is_one(c) => write!(f, "λ^{k}")?,
                _ => write!(f, "{c}*λ^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;
    use num_rational::BigRational;

    fn p(c: &[i64]) -> UniPoly<BigRational> {
        UniPoly::new(c.iter().map(|&v| rat(v, 1)).collect())
    }

    #[test]
    fn division_and_gcd() {
        // (x - 1)(x + 2) and (x - 1)(x - 3)
        let a = p(&[-2, 1, 1]);
        let b = p(&[3, -4, 1]);
        assert_eq!(a.gcd(&b), p(&[-1, 1]));
        let (q, r) = a.div_rem(&p(&[-1, 1]));
        assert_eq!(q, p(&[2, 1]));
        assert!(r.is_zero());
    }

    #[test]
    fn square_free_splits_multiplicities() {
        // (x - 1)^2 (x^2 - 3x + 1)
        let f = p(&[-1, 1]).pow(2) * p(&[1, -3, 1]);
        let sf = f.square_free();
        assert_eq!(sf, vec![(1, p(&[1, -3, 1])), (2, p(&[-1, 1]))]);
    }

    #[test]
    fn derivative_and_eval() {
        let f = p(&[1, 0, 3]);
        assert_eq!(f.derivative(), p(&[0, 6]));
        assert_eq!(f.eval(&rat(2, 1)), rat(13, 1));
    }
}
