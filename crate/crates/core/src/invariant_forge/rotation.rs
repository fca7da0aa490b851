//! Polynomial invariants of finite-order rotations in dimension 2.
//!
//! For `Ã` with trace `t ∈ {−1, 0, 1}` the eigenvalue `ω = (t + √D)/2`,
//! `D = t² − 4`, is a primitive `k`-th root of unity. A left eigenvector
//! `ℓ = (Ã₂₁, ω − Ã₁₁)` gives a linear form with `ℓ(Ãp) = ω ℓ(p)`, so
//! `|ℓ|²` and `Re ℓᵏ` are invariant. Both have rational coefficients and are
//! computed exactly in `ℚ(√D)`.

use super::expr::{Expr, SmoothIntegral};
use super::poly::{momentum_names, RatPoly};
use crate::algebra::rat;
use crate::error::{Error, Result};
use crate::matrix_lab::{dual_action, MonodromyMatrix};
use nalgebra::DMatrix;
use num_rational::BigRational;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct RotationInvariants {
    pub k: u32,
    pub trace: i64,
    /// In the original momenta `p1, p2`.
    pub i1: RatPoly,
    pub i2: RatPoly,
    /// In the rotation-adapted coordinates `a, b`, where `ℓ = a + ib`.
    pub i1_adapted: RatPoly,
    pub i2_adapted: RatPoly,
    /// `(a, b)ᵀ = adapted · p`.
    pub adapted: DMatrix<f64>,
    /// Both invariants satisfy `I ∘ Ã = I` exactly.
    pub exact: bool,
}

/// `re + im·√D`.
#[derive(Clone, Debug)]
struct QuadPoly {
    re: RatPoly,
    im: RatPoly,
}

impl QuadPoly {
    fn mul(&self, o: &QuadPoly, d: &BigRational) -> QuadPoly {
        QuadPoly {
            re: self.re.clone() * o.re.clone() + (self.im.clone() * o.im.clone()).scale(d),
            im: self.re.clone() * o.im.clone() + self.im.clone() * o.re.clone(),
        }
    }

    fn pow(&self, k: u32, d: &BigRational, vars: &Arc<Vec<String>>) -> QuadPoly {
        let mut out = QuadPoly { re: RatPoly::constant_in(vars.clone(), rat(1, 1)), im: RatPoly::zero_in(vars.clone()) };
        for _ in 0..k {
            out = out.mul(self, d);
        }
        out
    }
}

impl RotationInvariants {
    /// `I₁`, `I₂` as integrals of the original momenta.
    pub fn integrals(&self) -> Vec<SmoothIntegral> {
        let id = DMatrix::identity(2, 2);
        let names = self.i1.vars().to_vec();
        vec![
            SmoothIntegral::new("I_1", Expr::poly(self.i1.clone()), &id, names.clone()),
            SmoothIntegral::new("I_2", Expr::poly(self.i2.clone()), &id, names),
        ]
    }
}

fn order_from_trace(t: i64) -> Result<u32> {
    match t {
        -1 => Ok(3),
        0 => Ok(4),
        1 => Ok(6),
        _ => Err(Error::NotFiniteOrderRotation { trace: t }),
    }
}

pub fn rotation_invariants(a: &MonodromyMatrix) -> Result<RotationInvariants> {
    if a.n() != 2 {
        return Err(Error::NotRotation);
    }
    let trace = a.trace();
    let k = order_from_trace(trace)?;
    let dual = dual_action(a);
    let (d11, d21) = (dual.get(0, 0), dual.get(1, 0));
    let vars = momentum_names(2);
    let p1 = RatPoly::var(vars.clone(), 0)?;
    let p2 = RatPoly::var(vars.clone(), 1)?;
    let disc = rat(trace * trace - 4, 1);
    // ℓ = Ã₂₁ p₁ + (t/2 − Ã₁₁) p₂ + (1/2)√D p₂
    let ell = QuadPoly {
        re: p1.scale(&rat(d21, 1)) + p2.scale(&(rat(trace, 2) - rat(d11, 1))),
        im: p2.scale(&rat(1, 2)),
    };
    let i1 = ell.re.clone() * ell.re.clone() - (ell.im.clone() * ell.im.clone()).scale(&disc);
    let i2 = ell.pow(k, &disc, &vars).re;

    let ab = Arc::new(vec!["a".to_string(), "b".to_string()]);
    let a_var = RatPoly::var(ab.clone(), 0)?;
    let b_var = RatPoly::var(ab.clone(), 1)?;
    let z = QuadPoly { re: a_var.clone(), im: b_var.clone() };
    let i1_adapted = a_var.clone() * a_var + b_var.clone() * b_var;
    let i2_adapted = z.pow(k, &rat(-1, 1), &ab).re;
    let s = ((4 - trace * trace) as f64).sqrt();
    let adapted = DMatrix::from_row_slice(2, 2, &[d21 as f64, trace as f64 / 2.0 - d11 as f64, 0.0, 0.5 * s]);

    let image = [
        p1.scale(&rat(dual.get(0, 0), 1)) + p2.scale(&rat(dual.get(0, 1), 1)),
        p1.scale(&rat(dual.get(1, 0), 1)) + p2.scale(&rat(dual.get(1, 1), 1)),
    ];
    let exact = i1.substitute(&image) == i1 && i2.substitute(&image) == i2;
    Ok(RotationInvariants { k, trace, i1, i2, i1_adapted, i2_adapted, adapted, exact })
}
