use super::UniPoly;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Rational function in the formal parameter λ over ℚ, kept in lowest
/// terms with a monic denominator.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatFunc {
    num: UniPoly<BigRational>,
    den: UniPoly<BigRational>,
}

impl RatFunc {
    pub fn new(num: UniPoly<BigRational>, den: UniPoly<BigRational>) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Self::zero();
        }
        let g = num.gcd(&den);
        let mut num = num.div_rem(&g).0;
        let mut den = den.div_rem(&g).0;
        let lead = den.leading().unwrap().clone();
        num = num.scale(&(BigRational::one() / lead.clone()));
        den = den.scale(&(BigRational::one() / lead));
        RatFunc { num, den }
    }

    pub fn from_poly(p: UniPoly<BigRational>) -> Self {
        RatFunc { num: p, den: UniPoly::one() }
    }

    pub fn from_rational(q: BigRational) -> Self {
        Self::from_poly(UniPoly::constant(q))
    }

    /// The parameter λ itself.
    pub fn lambda() -> Self {
        Self::from_poly(UniPoly::x())
    }

    pub fn num(&self) -> &UniPoly<BigRational> {
        &self.num
    }

    pub fn den(&self) -> &UniPoly<BigRational> {
        &self.den
    }

    /// `Some(q)` when the function is the constant `q`.
    pub fn as_constant(&self) -> Option<BigRational> {
        (self.num.is_constant() && self.den.is_constant()).then(|| self.num.coeff(0))
    }

    pub fn as_poly(&self) -> Option<&UniPoly<BigRational>> {
        self.den.is_constant().then_some(&self.num)
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn recip(&self) -> Self {
        Self::new(self.den.clone(), self.num.clone())
    }
}

impl Zero for RatFunc {
    fn zero() -> Self {
        RatFunc { num: UniPoly::zero(), den: UniPoly::one() }
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for RatFunc {
    fn one() -> Self {
        Self::from_poly(UniPoly::one())
    }
}

impl Add for RatFunc {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.den == rhs.den {
            return Self::new(self.num + rhs.num, self.den);
        }
        Self::new(
            self.num * rhs.den.clone() + rhs.num * self.den.clone(),
            self.den * rhs.den,
        )
    }
}

impl Sub for RatFunc {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for RatFunc {
    type Output = Self;
    fn neg(self) -> Self {
        RatFunc { num: -self.num, den: self.den }
    }
}

impl Mul for RatFunc {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        Self::new(self.num * rhs.num, self.den * rhs.den)
    }
}

impl Div for RatFunc {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        assert!(!rhs.is_zero(), "division by zero rational function");
        Self::new(self.num * rhs.den, self.den * rhs.num)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = self.num.map(|c| Rat(c.clone()));
        if self.den.is_constant() {
            if num.coeffs().len() > 1 {
                write!(f, "({num})")
            } else {
                write!(f, "{num}")
            }
        } else {
            let den = self.den.map(|c| Rat(c.clone()));
            write!(f, "({num})/({den})")
        }
    }
}

/// Display wrapper printing rationals as `a/b`.
#[derive(Clone, PartialEq, Debug)]
struct Rat(BigRational);

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::rational_text(&self.0))
    }
}

macro_rules! forward_rat {
    ($tr:ident, $m:ident) => {
        impl $tr for Rat {
            type Output = Rat;
            fn $m(self, rhs: Rat) -> Rat {
                Rat(self.0.$m(rhs.0))
            }
        }
    };
}
forward_rat!(Add, add);
forward_rat!(Sub, sub);
forward_rat!(Mul, mul);
impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}
impl Zero for Rat {
    fn zero() -> Self {
        Rat(BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}
impl One for Rat {
    fn one() -> Self {
        Rat(BigRational::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    #[test]
    fn reduces_to_lowest_terms() {
        let l = RatFunc::lambda();
        let one = RatFunc::one();
        // (λ² − 1)/(λ − 1) = λ + 1
        let f = (l.clone() * l.clone() - one.clone()) / (l.clone() - one.clone());
        assert_eq!(f, l.clone() + one.clone());
        assert!(f.as_poly().is_some());
        let g = one.clone() / l.clone() + one.clone() / l.clone();
        assert_eq!(g * l, RatFunc::from_rational(rat(2, 1)));
    }

    #[test]
    fn display() {
        let l = RatFunc::lambda();
        let f = RatFunc::one() / (l.clone() + RatFunc::one());
        assert_eq!(f.to_string(), "(1)/(λ + 1)");
        assert_eq!(RatFunc::from_rational(rat(-3, 2)).to_string(), "-3/2");
    }
}
