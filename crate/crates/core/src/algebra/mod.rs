//! Exact coefficient rings shared by the spectral and symbolic code.
//!
//! [`UniPoly`] is a dense univariate polynomial, used both for integer
//! characteristic polynomials and for polynomials in the formal eigenvalue
//! parameter λ. [`RatFunc`] is its fraction field, which is what the
//! linear solves for the Jordan-chain invariants run over.

mod ratfunc;
mod upoly;

pub use ratfunc::RatFunc;
pub use upoly::UniPoly;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Commutative ring with unit, as needed for polynomial coefficients.
pub trait Ring:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
}

impl<T> Ring for T where
    T: Clone
        + PartialEq
        + fmt::Debug
        + fmt::Display
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Neg<Output = T>
        + Send
        + Sync
{
}

/// Shorthand for an exact rational.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Render a rational as `a` or `a/b`.
pub fn rational_text(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parse `a` or `a/b`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or_else(|| {
        // Very large numerators and denominators: go through the ratio of logs.
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub(crate) fn is_one<C: Ring>(c: &C) -> bool {
    *c == C::one()
}
