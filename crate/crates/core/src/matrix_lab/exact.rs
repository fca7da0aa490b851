//! Exact integer and rational linear algebra on small matrices.

use crate::algebra::UniPoly;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub(crate) type IntMatrix = Vec<Vec<BigInt>>;

pub(crate) fn to_big(m: &[Vec<i64>]) -> IntMatrix {
    m.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect()
}

/// Fraction-free (Bareiss) determinant.
pub(crate) fn determinant(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    let mut a = to_big(m);
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Characteristic polynomial det(xE − M), ascending coefficients,
/// by Faddeev–LeVerrier. Every division by `k` is exact over ℤ.
pub(crate) fn char_poly(m: &[Vec<i64>]) -> Vec<BigInt> {
    let n = m.len();
    let a = to_big(m);
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    let mut mk: IntMatrix = vec![vec![BigInt::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} E
        let mut next = mat_mul(&a, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        mk = next;
        let am = mat_mul(&a, &mk);
        let tr: BigInt = (0..n).map(|i| am[i][i].clone()).sum();
        coeffs[n - k] = -tr / BigInt::from(k);
    }
    coeffs
}

pub(crate) fn char_poly_rational(m: &[Vec<i64>]) -> UniPoly<BigRational> {
    UniPoly::new(char_poly(m).into_iter().map(BigRational::from_integer).collect())
}

fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let mut out = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                out[i][j] += &a[i][k] * &b[k][j];
            }
        }
    }
    out
}

/// Exact inverse over ℚ by Gauss–Jordan elimination; `None` if singular.
#[allow(clippy::needless_range_loop)]
pub(crate) fn inverse_rational(m: &[Vec<i64>]) -> Option<Vec<Vec<BigRational>>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<BigRational> =
                r.iter().map(|&v| BigRational::from_integer(v.into())).collect();
            row.extend((0..n).map(|j| {
                if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .filter(|&i| !a[i][col].is_zero())
            .max_by_key(|&i| a[i][col].abs())?;
        a.swap(piv, col);
        let inv = BigRational::one() / a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..n {
            if i == col || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone();
            for j in 0..2 * n {
                let t = &a[col][j] * &f;
                a[i][j] -= t;
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}
