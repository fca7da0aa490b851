//! Monodromy matrices, their spectra and the dual action on momenta.

mod exact;
pub mod jordan;
mod roots;

pub use jordan::{assemble_form, real_jordan, RealJordan};
pub use roots::Root;

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Default cap on the dimension of accepted matrices.
pub const DEFAULT_MAX_DIM: usize = 8;

/// An integer matrix with determinant exactly 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct MonodromyMatrix {
    entries: Vec<Vec<i64>>,
}

impl TryFrom<Vec<Vec<i64>>> for MonodromyMatrix {
    type Error = Error;
    fn try_from(v: Vec<Vec<i64>>) -> Result<Self> {
        validate_monodromy(&v)
    }
}

impl From<MonodromyMatrix> for Vec<Vec<i64>> {
    fn from(m: MonodromyMatrix) -> Self {
        m.entries
    }
}

/// Validate a square integer matrix of determinant 1 (dimension ≤ 8).
pub fn validate_monodromy(entries: &[Vec<i64>]) -> Result<MonodromyMatrix> {
    validate_monodromy_with_limit(entries, DEFAULT_MAX_DIM)
}

pub fn validate_monodromy_with_limit(entries: &[Vec<i64>], limit: usize) -> Result<MonodromyMatrix> {
    let n = entries.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    if let Some((row, r)) = entries.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::NotSquare { rows: n, row, cols: r.len() });
    }
    if n > limit {
        return Err(Error::DimensionTooLarge { n, limit });
    }
    let det = exact::determinant(entries);
    if det != BigInt::from(1) {
        let det = det.to_i128().unwrap_or(if det.sign() == num_bigint::Sign::Minus {
            i128::MIN
        } else {
            i128::MAX
        });
        return Err(Error::NotUnimodular { det });
    }
    Ok(MonodromyMatrix { entries: entries.to_vec() })
}

impl MonodromyMatrix {
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<i64>] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i][j]
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        MonodromyMatrix { entries }
    }

    pub fn trace(&self) -> i64 {
        (0..self.n()).map(|i| self.entries[i][i]).sum()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n();
        let entries = (0..n).map(|i| (0..n).map(|j| self.entries[j][i]).collect()).collect();
        MonodromyMatrix { entries }
    }

    /// Exact inverse; integral because the determinant is 1.
    pub fn inverse(&self) -> Self {
        let inv = exact::inverse_rational(&self.entries).expect("unimodular matrix is invertible");
        let entries = inv
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|q| {
                        assert!(q.is_integer(), "inverse of a unimodular matrix is integral");
                        q.to_integer().to_i64().expect("inverse entry fits in i64")
                    })
                    .collect()
            })
            .collect();
        MonodromyMatrix { entries }
    }

    /// Exact integer product. Panics on i64 overflow.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n();
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n).fold(0i64, |acc, k| {
                            acc.checked_add(self.entries[i][k].checked_mul(other.entries[k][j]).expect("overflow"))
                                .expect("overflow")
                        })
                    })
                    .collect()
            })
            .collect();
        MonodromyMatrix { entries }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n())
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j] as f64)
    }

    /// Exact characteristic polynomial det(xE − A), ascending coefficients.
    pub fn char_poly(&self) -> Vec<BigInt> {
        exact::char_poly(&self.entries)
    }

    /// Distinct eigenvalues with multiplicities, by decreasing modulus.
    pub fn eigenvalues(&self) -> Vec<Root> {
        roots::roots(&exact::char_poly_rational(&self.entries))
    }
}

impl fmt::Display for MonodromyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .entries
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

/// `Ã = (Aᵀ)⁻¹`, the action of the monodromy on momenta.
pub fn dual_action(a: &MonodromyMatrix) -> MonodromyMatrix {
    a.transpose().inverse()
}

/// `log max |λ|` over the spectrum of `A`, in nats.
pub fn entropy_lower_bound(a: &MonodromyMatrix) -> f64 {
    let r = a.eigenvalues().iter().map(|r| r.value.norm()).fold(1.0, f64::max);
    r.ln().max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    AllReal,
    ComplexUnitCircle,
    Mixed,
}

/// A Jordan block of the dual action, `size` coordinates long.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanBlock {
    pub eigenvalue: Complex64,
    pub size: usize,
}

/// Spectrum of `A` and the real Jordan structure of `Ã`.
///
/// In coordinates `p' = P⁻¹ p` the dual action is `dual_form`, block
/// diagonal with the 1×1 blocks first. For the rotation case `dual_form` is a
/// 2×2 rotation by the angle of the first eigenvalue of `Ã`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData {
    /// Eigenvalues of `A` with repetition, by decreasing modulus.
    pub eigenvalues: Vec<Complex64>,
    pub kind: SpectrumKind,
    pub jordan_blocks: Vec<JordanBlock>,
    pub basis: DMatrix<f64>,
    pub basis_inverse: DMatrix<f64>,
    pub dual_form: DMatrix<f64>,
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    /// Real blocks `(eigenvalue of Ã, size)`; empty for the rotation case.
    pub fn real_blocks(&self) -> Vec<(f64, usize)> {
        if self.kind != SpectrumKind::AllReal {
            return Vec::new();
        }
        self.jordan_blocks.iter().map(|b| (b.eigenvalue.re, b.size)).collect()
    }

    /// Number of 1×1 blocks of `Ã`.
    pub fn diagonal_count(&self) -> usize {
        self.jordan_blocks.iter().take_while(|b| b.size == 1).count()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn classify_kind(roots: &[Root]) -> SpectrumKind {
    let real = roots.iter().all(|r| r.value.im == 0.0);
    let unit = roots.iter().all(|r| r.value.im != 0.0 && (r.value.norm() - 1.0).abs() < 1e-12);
    if real {
        SpectrumKind::AllReal
    } else if unit {
        SpectrumKind::ComplexUnitCircle
    } else {
        SpectrumKind::Mixed
    }
}

/// Eigenvalues of `A` and the Jordan structure of the dual action.
pub fn spectrum(a: &MonodromyMatrix) -> Result<SpectralData> {
    let n = a.n();
    let roots = a.eigenvalues();
    let kind = classify_kind(&roots);
    let eigenvalues: Vec<Complex64> =
        roots.iter().flat_map(|r| std::iter::repeat(r.value).take(r.multiplicity)).collect();
    let dual = dual_action(a).to_f64();
    match kind {
        SpectrumKind::AllReal => {
            let eigs: Vec<(f64, usize)> = roots.iter().map(|r| (1.0 / r.value.re, r.multiplicity)).collect();
            let rj = real_jordan(&dual, &eigs)?;
            let jordan_blocks = rj
                .blocks
                .iter()
                .map(|&(mu, size)| JordanBlock { eigenvalue: Complex64::new(mu, 0.0), size })
                .collect();
            Ok(SpectralData {
                eigenvalues,
                kind,
                jordan_blocks,
                basis: rj.basis,
                basis_inverse: rj.basis_inverse,
                dual_form: rj.form,
            })
        }
        SpectrumKind::ComplexUnitCircle if n == 2 => {
            // Eigenvalue of Ã in the upper half plane is the conjugate of the
            // upper eigenvalue of A, since Ã has the reciprocal spectrum.
            let mu = roots.iter().map(|r| r.value.conj()).find(|z| z.im > 0.0).unwrap();
            let (p, pinv) = rotation_basis(&dual, mu);
            let form = DMatrix::from_row_slice(2, 2, &[mu.re, -mu.im, mu.im, mu.re]);
            Ok(SpectralData {
                eigenvalues,
                kind,
                jordan_blocks: vec![
                    JordanBlock { eigenvalue: mu, size: 1 },
                    JordanBlock { eigenvalue: mu.conj(), size: 1 },
                ],
                basis: p,
                basis_inverse: pinv,
                dual_form: form,
            })
        }
        _ => Err(Error::MixedSpectrumUnsupported { n }),
    }
}

/// `P = [Re w, −Im w]` for an eigenvector `w` of `m` at `mu`, so that
/// `P⁻¹ m P` is the rotation by `arg mu`.
pub(crate) fn rotation_basis(m: &DMatrix<f64>, mu: Complex64) -> (DMatrix<f64>, DMatrix<f64>) {
    let w = if m[(0, 1)].abs() >= m[(1, 0)].abs() {
        [Complex64::new(m[(0, 1)], 0.0), mu - m[(0, 0)]]
    } else {
        [mu - m[(1, 1)], Complex64::new(m[(1, 0)], 0.0)]
    };
    let p = DMatrix::from_row_slice(2, 2, &[w[0].re, -w[0].im, w[1].re, -w[1].im]);
    let pinv = p.clone().try_inverse().expect("rotation basis is invertible");
    (p, pinv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> MonodromyMatrix {
        validate_monodromy(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(validate_monodromy(&[vec![2, 1], vec![1, 1]]).is_ok());
        assert!(validate_monodromy(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).is_ok());
        assert_eq!(
            validate_monodromy(&[vec![2, 0], vec![0, 1]]),
            Err(Error::NotUnimodular { det: 2 })
        );
        assert_eq!(
            validate_monodromy(&[vec![1, 0], vec![0]]),
            Err(Error::NotSquare { rows: 2, row: 1, cols: 1 })
        );
        assert_eq!(validate_monodromy(&[]), Err(Error::Empty));
        let big = vec![vec![0i64; 9]; 9];
        assert_eq!(validate_monodromy(&big), Err(Error::DimensionTooLarge { n: 9, limit: 8 }));
    }

    #[test]
    fn dual_action_examples() {
        assert_eq!(dual_action(&m(&[&[2, 1], &[1, 1]])), m(&[&[1, -1], &[-1, 2]]));
        assert_eq!(dual_action(&m(&[&[1, 1], &[0, 1]])), m(&[&[1, 0], &[-1, 1]]));
        assert!(dual_action(&MonodromyMatrix::identity(3)).is_identity());
    }

    #[test]
    fn cat_map_spectrum() {
        let s = spectrum(&m(&[&[2, 1], &[1, 1]])).unwrap();
        let l = (3.0 + 5f64.sqrt()) / 2.0;
        assert_eq!(s.kind, SpectrumKind::AllReal);
        assert!((s.eigenvalues[0].re - l).abs() < 1e-14);
        assert!((s.eigenvalues[1].re - 1.0 / l).abs() < 1e-14);
        // p_u, the first Jordan coordinate, scales by λ under Ã.
        assert!((s.jordan_blocks[0].eigenvalue.re - l).abs() < 1e-12);
        let p = &s.basis;
        assert!((p.transpose() * p - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn rotation_spectrum() {
        let a = m(&[&[0, -1], &[1, 0]]);
        let s = spectrum(&a).unwrap();
        assert_eq!(s.kind, SpectrumKind::ComplexUnitCircle);
        assert!((s.eigenvalues[0] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        let dual = dual_action(&a).to_f64();
        let r = &s.basis_inverse * dual * &s.basis - &s.dual_form;
        assert!(r.amax() < 1e-12);
    }

    #[test]
    fn mixed_rejected() {
        // rotation by π/2 plus a unit eigenvalue
        let a = m(&[&[0, -1, 0], &[1, 0, 0], &[0, 0, 1]]);
        assert_eq!(spectrum(&a), Err(Error::MixedSpectrumUnsupported { n: 3 }));
    }

    #[test]
    fn entropy_examples() {
        let l = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((entropy_lower_bound(&m(&[&[2, 1], &[1, 1]])) - l.ln()).abs() < 1e-14);
        assert!((entropy_lower_bound(&m(&[&[2, 1], &[1, 1]])) - 0.9624236501).abs() < 1e-10);
        assert_eq!(entropy_lower_bound(&MonodromyMatrix::identity(2)), 0.0);
        assert_eq!(entropy_lower_bound(&m(&[&[1, 1], &[0, 1]])), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let a: MonodromyMatrix = serde_json::from_str("[[2,1],[1,1]]").unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), "[[2,1],[1,1]]");
        assert!(serde_json::from_str::<MonodromyMatrix>("[[2,0],[0,1]]").is_err());
    }
}
