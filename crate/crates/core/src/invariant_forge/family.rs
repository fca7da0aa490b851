//! The invariant `Q` and the smooth `Ã`-invariant family built from it.

use super::expr::{Expr, SmoothIntegral};
use super::lemma::{apply_l, solve_gk};
use super::poly::{momentum_names, Monomial, MultiPoly, RatPoly};
use crate::error::{Error, Result};
use crate::matrix_lab::{dual_action, MonodromyMatrix, SpectralData, SpectrumKind};
use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use std::sync::Arc;

/// Convention note attached to every logarithmic slot.
pub const ABS_LOG_CONVENTION: &str = "log|q|/log|mu|: absolute values in both logarithms";

/// Variable layout of the Jordan coordinates of `Ã`.
#[derive(Clone, Debug, PartialEq)]
pub struct JordanLayout {
    pub names: Arc<Vec<String>>,
    /// Indices of the 1×1-block coordinates `q_i`, with their eigenvalues.
    pub diagonal: Vec<(usize, f64)>,
    /// Chains `(eigenvalue, indices)` for blocks of size ≥ 2.
    pub chains: Vec<(f64, Vec<usize>)>,
}

/// `q₁…q_l, p_{11}…p_{1n₁}, …`.
pub fn jordan_layout(spec: &SpectralData) -> Result<JordanLayout> {
    if spec.kind != SpectrumKind::AllReal {
        return Err(Error::NotRealSpectrum);
    }
    let mut names = Vec::new();
    let mut diagonal = Vec::new();
    let mut chains = Vec::new();
    let mut idx = 0;
    for b in &spec.jordan_blocks {
        if b.size == 1 {
            diagonal.push((idx, b.eigenvalue.re));
            names.push(format!("q{}", diagonal.len()));
            idx += 1;
        } else {
            let j = chains.len() + 1;
            let ids: Vec<usize> = (idx..idx + b.size).collect();
            for m in 1..=b.size {
                names.push(if j < 10 && m < 10 { format!("p{j}{m}") } else { format!("p{j}_{m}") });
            }
            idx += b.size;
            chains.push((b.eigenvalue.re, ids));
        }
    }
    Ok(JordanLayout { names: Arc::new(names), diagonal, chains })
}

/// `Q = q₁⋯q_l · p_{11}^{n₁}⋯p_{k1}^{n_k}` in Jordan coordinates.
pub fn build_q(spec: &SpectralData) -> Result<RatPoly> {
    let layout = jordan_layout(spec)?;
    let mut exps = vec![0u32; layout.names.len()];
    for &(i, _) in &layout.diagonal {
        exps[i] = 1;
    }
    for (_, ids) in &layout.chains {
        exps[ids[0]] = ids.len() as u32;
    }
    Ok(RatPoly::from_terms(layout.names.clone(), [(Monomial::new(exps), BigRational::one())]))
}

/// Outcome of the exact check that `Q ∘ J = Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct QInvariance {
    /// `Q ∘ J = m·Q` with `m` a monomial in the eigenvalue symbols.
    pub multiplier: MultiPoly<BigRational>,
    /// Exponent of each distinct eigenvalue of `Ã` in `m`, with the value.
    pub exponents: Vec<(f64, u32)>,
    /// Exponents equal the algebraic multiplicities from the exact
    /// characteristic polynomial of `Ã`.
    pub exponents_are_multiplicities: bool,
    /// `det Ã = 1` exactly.
    pub det_is_one: bool,
}

impl QInvariance {
    /// `m = Π εᵢ^{mult_i} = det Ã = 1`.
    pub fn holds(&self) -> bool {
        self.exponents_are_multiplicities && self.det_is_one
    }
}

/// Apply the Jordan form of `Ã` to `Q` with one formal symbol per distinct
/// eigenvalue and identify the multiplier.
pub fn verify_q_invariance(a: &MonodromyMatrix, spec: &SpectralData) -> Result<QInvariance> {
    let layout = jordan_layout(spec)?;
    let q = build_q(spec)?;
    // Distinct eigenvalue symbols e1, e2, …
    let mut distinct: Vec<f64> = Vec::new();
    let symbol_of = |mu: f64, distinct: &mut Vec<f64>| -> usize {
        match distinct.iter().position(|&d| (d - mu).abs() < 1e-7 * mu.abs().max(1.0)) {
            Some(i) => i,
            None => {
                distinct.push(mu);
                distinct.len() - 1
            }
        }
    };
    let mut block_symbols = Vec::new();
    for &(i, mu) in &layout.diagonal {
        block_symbols.push((vec![i], symbol_of(mu, &mut distinct)));
    }
    for (mu, ids) in &layout.chains {
        block_symbols.push((ids.clone(), symbol_of(*mu, &mut distinct)));
    }
    let sym_names = Arc::new((1..=distinct.len()).map(|i| format!("e{i}")).collect::<Vec<_>>());
    type S = MultiPoly<BigRational>;
    let lifted: MultiPoly<S> = q.map_coeffs(|c| S::constant_in(sym_names.clone(), c.clone()));
    let mut image = lifted.clone();
    for (ids, s) in &block_symbols {
        let lam = S::var(sym_names.clone(), *s)?;
        image = apply_l(&image, &lam, ids)?;
    }
    if image.len() != 1 {
        return Err(Error::InvalidInput(format!("Q ∘ J has {} terms", image.len())));
    }
    let (mono, mult) = image.terms().next().map(|(m, c)| (m.clone(), c.clone())).unwrap();
    let q_mono = q.terms().next().map(|(m, _)| m.clone()).unwrap();
    if mono != q_mono || mult.len() != 1 {
        return Err(Error::InvalidInput("Q ∘ J is not a multiple of Q".into()));
    }
    let (m_mono, m_coeff) = mult.terms().next().map(|(m, c)| (m.clone(), c.clone())).unwrap();
    let exponents: Vec<(f64, u32)> = distinct.iter().enumerate().map(|(i, &d)| (d, m_mono.exp(i))).collect();
    // Exact multiplicities of the eigenvalues of Ã.
    let dual = dual_action(a);
    let roots = dual.eigenvalues();
    let exponents_are_multiplicities = m_coeff.is_one()
        && roots.len() == exponents.len()
        && roots.iter().all(|r| {
            exponents
                .iter()
                .any(|&(d, e)| (r.value.re - d).abs() < 1e-7 * d.abs().max(1.0) && r.value.im == 0.0 && e as usize == r.multiplicity)
        });
    let cp = dual.char_poly();
    let n = a.n();
    let signed_c0 = if n % 2 == 0 { cp[0].clone() } else { -cp[0].clone() };
    let det_is_one = signed_c0.to_i64() == Some(1);
    Ok(QInvariance { multiplier: mult, exponents, exponents_are_multiplicities, det_is_one })
}

/// Snap entries within `1e-12` of an integer.
fn snap(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|x| {
        let r = x.round();
        if (x - r).abs() < 1e-12 {
            r
        } else {
            x
        }
    })
}

/// `Q` as an integral of lattice momenta.
pub fn q_integral(spec: &SpectralData) -> Result<SmoothIntegral> {
    let layout = jordan_layout(spec)?;
    let q = build_q(spec)?;
    Ok(SmoothIntegral::new("Q", Expr::poly(q), &snap(&spec.basis_inverse), layout.names.to_vec()))
}

fn is_unit(mu: f64) -> bool {
    (mu.abs() - 1.0).abs() < 1e-12
}

/// The `n − 1` smooth integrals which together with `Q` replace the
/// momenta on the quotient.
///
/// Every 1×1 block and every chain top contributes a logarithmic slot
/// `exp(−1/Q²) sin(2π log|q|/log|μ|)`; chain coordinates `m ≥ 2` contribute
/// `exp(−1/Q²) sin(2π λ^{m−1} G_{m−1}/p_{j1}^{m−1})`. One logarithmic slot is
/// redundant given `Q`: a slot with `|μ| = 1` if there is one (its formula
/// degenerates), otherwise the last one. Two or more unit slots are
/// rejected.
pub fn smooth_family(spec: &SpectralData) -> Result<Vec<SmoothIntegral>> {
    let layout = jordan_layout(spec)?;
    let q = build_q(spec)?;
    let names = layout.names.clone();
    let t = snap(&spec.basis_inverse);
    // Logarithmic slots in paper order: q_i, then chain tops.
    let mut slots: Vec<(usize, f64, String)> =
        layout.diagonal.iter().enumerate().map(|(k, &(i, mu))| (i, mu, format!("I_{}", k + 1))).collect();
    for (j, (mu, ids)) in layout.chains.iter().enumerate() {
        slots.push((ids[0], *mu, format!("I_{}1", j + 1)));
    }
    let units: Vec<usize> = (0..slots.len()).filter(|&s| is_unit(slots[s].1)).collect();
    let dropped = match units.len() {
        0 => slots.len().checked_sub(1),
        1 => Some(units[0]),
        _ => {
            let which: Vec<String> = units.iter().map(|&s| format!("{} (μ = {})", slots[s].2, slots[s].1)).collect();
            return Err(Error::UnitEigenvalueUnsupported(which.join(", ")));
        }
    };
    let flat = || Expr::flat(Expr::poly(q.clone()));
    let var = |i: usize| RatPoly::var(names.clone(), i).expect("index in range");
    let mut out = Vec::new();
    for (s, (i, mu, label)) in slots.iter().enumerate() {
        if Some(s) == dropped {
            continue;
        }
        let arg = Expr::scale(1.0 / mu.abs().ln(), Expr::ln_abs(Expr::poly(var(*i))));
        let e = Expr::mul(vec![flat(), Expr::sin_2pi(arg)]);
        out.push(SmoothIntegral::new(label.clone(), e, &t, names.to_vec()).with_convention(ABS_LOG_CONVENTION));
    }
    for (j, (mu, ids)) in layout.chains.iter().enumerate() {
        let images: Vec<RatPoly> = ids.iter().map(|&i| var(i)).collect();
        for m in 2..=ids.len() {
            let g = solve_gk(m - 1, m)?.substitute(&images[..m]);
            let top = var(ids[0]).pow(m as u32 - 1);
            let arg = Expr::scale(mu.powi(m as i32 - 1), Expr::quotient(Expr::poly(g), Expr::poly(top)));
            let e = Expr::mul(vec![flat(), Expr::sin_2pi(arg)]);
            out.push(SmoothIntegral::new(format!("I_{}{}", j + 1, m), e, &t, names.to_vec()));
        }
    }
    Ok(out)
}

/// `p₁, …, p_n` themselves; every function of the momenta is invariant when
/// `A = E`.
pub fn coordinate_family(n: usize) -> Vec<SmoothIntegral> {
    let names = momentum_names(n);
    (0..n)
        .map(|i| {
            SmoothIntegral::new(
                format!("p{}", i + 1),
                Expr::poly(RatPoly::var(names.clone(), i).unwrap()),
                &DMatrix::identity(n, n),
                names.to_vec(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_lab::{spectrum, validate_monodromy};

    fn setup(rows: &[&[i64]]) -> (MonodromyMatrix, SpectralData) {
        let a = validate_monodromy(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        let s = spectrum(&a).unwrap();
        (a, s)
    }

    #[test]
    fn q_examples() {
        let (a, s) = setup(&[&[2, 1], &[1, 1]]);
        assert_eq!(build_q(&s).unwrap().canonical_text(), "q1*q2");
        assert!(verify_q_invariance(&a, &s).unwrap().holds());
        let (a, s) = setup(&[&[1, 1], &[0, 1]]);
        assert_eq!(build_q(&s).unwrap().canonical_text(), "p11^2");
        assert!(verify_q_invariance(&a, &s).unwrap().holds());
        let (a, s) = setup(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(build_q(&s).unwrap().canonical_text(), "q1*q2*q3");
        let v = verify_q_invariance(&a, &s).unwrap();
        assert_eq!(v.exponents, vec![(1.0, 3)]);
        assert!(v.holds());
    }

    #[test]
    fn sol_family_shape() {
        let (_, s) = setup(&[&[2, 1], &[1, 1]]);
        let fam = smooth_family(&s).unwrap();
        assert_eq!(fam.len(), 1);
        assert_eq!(fam[0].label, "I_1");
        // Q = 0 gives 0.
        let p = s.basis.column(1).into_owned();
        assert_eq!(fam[0].value(p.as_slice()), 0.0);
    }

    #[test]
    fn butler_family() {
        let (_, s) = setup(&[&[1, 1], &[0, 1]]);
        let fam = smooth_family(&s).unwrap();
        assert_eq!(fam.len(), 1);
        assert_eq!(fam[0].label, "I_12");
    }

    #[test]
    fn identity_rejected_with_unit_slots() {
        let (_, s) = setup(&[&[1, 0], &[0, 1]]);
        assert!(matches!(smooth_family(&s), Err(Error::UnitEigenvalueUnsupported(_))));
        assert_eq!(coordinate_family(2).len(), 2);
    }
}
