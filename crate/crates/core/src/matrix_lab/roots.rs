//! Eigenvalues from the exact characteristic polynomial.
//!
//! The polynomial is split into square-free parts over ℚ (Yun), the only
//! possible rational roots ±1 are divided out exactly, and the remaining
//! factors are solved with Aberth iteration and polished with Newton steps
//! on their integer coefficients.

use crate::algebra::{rational_to_f64, UniPoly};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// A distinct eigenvalue with its algebraic multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
    /// True when the root was found exactly (±1).
    pub exact: bool,
}

/// Distinct roots of a monic integer polynomial with multiplicities.
pub(crate) fn roots(charpoly: &UniPoly<BigRational>) -> Vec<Root> {
    let mut out = Vec::new();
    for (mult, factor) in charpoly.square_free() {
        let mut f = factor;
        for r in [1i64, -1] {
            let lin = UniPoly::new(vec![BigRational::from_integer((-r).into()), BigRational::one()]);
            let (q, rem) = f.div_rem(&lin);
            if rem.is_zero() {
                out.push(Root { value: Complex64::new(r as f64, 0.0), multiplicity: mult, exact: true });
                f = q;
            }
        }
        if f.is_constant() {
            continue;
        }
        let coeffs: Vec<f64> = f.coeffs().iter().map(rational_to_f64).collect();
        for z in aberth(&coeffs) {
            out.push(Root { value: z, multiplicity: mult, exact: false });
        }
    }
    sort_desc_modulus(&mut out);
    out
}

pub(crate) fn sort_desc_modulus(roots: &mut [Root]) {
    roots.sort_by(|a, b| {
        b.value
            .norm()
            .total_cmp(&a.value.norm())
            .then(b.value.re.total_cmp(&a.value.re))
            .then(b.value.im.total_cmp(&a.value.im))
    });
}

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::zero();
    let mut dp = Complex64::zero();
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

fn horner_real(c: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &a in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// All roots of a square-free monic polynomial (ascending coefficients).
fn aberth(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    if n == 1 {
        return vec![Complex64::new(-c[0] / c[1], 0.0)];
    }
    // Cauchy bound on the root moduli.
    let radius = 1.0 + c[..n].iter().map(|a| a.abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
            Complex64::from_polar(0.5 * radius, ang)
        })
        .collect();
    for _ in 0..500 {
        let mut delta_max: f64 = 0.0;
        for i in 0..n {
            let (p, dp) = horner(c, z[i]);
            if p == Complex64::zero() {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| Complex64::one() / (z[i] - z[j])).sum();
            let w = ratio / (Complex64::one() - ratio * s);
            z[i] -= w;
            delta_max = delta_max.max(w.norm() / z[i].norm().max(1.0));
        }
        if delta_max < 1e-16 {
            break;
        }
    }
    // Real coefficients: roots are real or come in conjugate pairs.
    let mut out = Vec::with_capacity(n);
    for root in z {
        if root.im.abs() < 1e-7 * root.norm().max(1.0) {
            out.push(Complex64::new(polish_real(c, root.re), 0.0));
        } else {
            out.push(polish_complex(c, root));
        }
    }
    // Enforce exact conjugate symmetry.
    let mut fixed = Vec::with_capacity(n);
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let r = out[i];
        if r.im == 0.0 {
            fixed.push(r);
            continue;
        }
        let j = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (out[a] - r.conj()).norm().total_cmp(&(out[b] - r.conj()).norm()));
        if let Some(j) = j {
            used[j] = true;
            let re = 0.5 * (r.re + out[j].re);
            let im = 0.5 * (r.im.abs() + out[j].im.abs());
            fixed.push(Complex64::new(re, im));
            fixed.push(Complex64::new(re, -im));
        } else {
            fixed.push(r);
        }
    }
    fixed
}

/// Newton iteration safeguarded by bisection on a sign-change bracket.
fn polish_real(c: &[f64], x0: f64) -> f64 {
    let mut x = x0;
    for _ in 0..60 {
        let (p, dp) = horner_real(c, x);
        if p == 0.0 || dp == 0.0 {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    // Bracket the root and bisect down to the last representable digits.
    let h = 1e-12 * x.abs().max(1.0);
    let (mut lo, mut hi) = (x - h, x + h);
    let (flo, fhi) = (horner_real(c, lo).0, horner_real(c, hi).0);
    if flo.signum() * fhi.signum() < 0.0 {
        let slo = flo.signum();
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = horner_real(c, mid).0;
            if fm == 0.0 {
                return mid;
            }
            if fm.signum() == slo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x = 0.5 * (lo + hi);
    }
    x
}

fn polish_complex(c: &[f64], z0: Complex64) -> Complex64 {
    let mut z = z0;
    for _ in 0..30 {
        let (p, dp) = horner(c, z);
        if dp == Complex64::zero() {
            break;
        }
        let step = p / dp;
        z -= step;
        if step.norm() <= 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    z
}
