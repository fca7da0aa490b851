//! The curve `γ(z) = e^{−zG₂} e^{−zG₁}` in `SL(n,ℝ)` and the metric family
//! `G(z) = γ(z)ᵀ Ĝ γ(z)` on the cylinder `Tⁿ × ℝ`.
//!
//! Curves are held in a *local frame*: torus coordinates `x` with lattice
//! coordinates `X = C x`. The lattice frame has `C = E`. The eigenframe of a
//! real-spectrum matrix has `C = P⁻ᵀ` with `P` the Jordan basis of `Ã`, so the
//! local momenta `Cᵀ p` are exactly the Jordan coordinates of the dual action.

mod expm;

pub use expm::expm;

use crate::error::{Error, Result};
use crate::matrix_lab::{self, real_jordan, MonodromyMatrix, SpectralData, SpectrumKind};
use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Ĝ symmetry tolerance.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Principal logarithm of a matrix with real positive spectrum, from its
/// real Jordan form: `log μ·E + log(E + N/μ)` on each block.
pub fn matrix_log_positive(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    if b.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.ncols() });
    }
    let scale = b.amax().max(1.0);
    let eig = b.complex_eigenvalues();
    let mut eigs = Vec::with_capacity(n);
    for z in eig.iter() {
        if z.im.abs() > 1e-7 * scale || z.re <= 0.0 {
            return Err(Error::NonPositiveSpectrum(format!("{z}")));
        }
        eigs.push((z.re, 1));
    }
    let rj = real_jordan(b, &eigs)?;
    Ok(&rj.basis * log_jordan(&rj.blocks, 1.0) * &rj.basis_inverse)
}

/// Logarithm of the lower bidiagonal Jordan form of `blocks` with each
/// sub-diagonal 1 replaced by `sub` (the sign-corrected blocks use −1).
fn log_jordan(blocks: &[(f64, usize)], sub: f64) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.1).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut off = 0;
    for &(mu, s) in blocks {
        let mu_abs = mu.abs();
        // X = N/μ, nilpotent of order s.
        let x = DMatrix::from_fn(s, s, |i, j| if i == j + 1 { sub / mu_abs } else { 0.0 });
        let mut block = DMatrix::identity(s, s) * mu_abs.ln();
        let mut power = DMatrix::identity(s, s);
        for k in 1..s {
            power = &power * &x;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            block += &power * (sign / k as f64);
        }
        out.view_mut((off, off), (s, s)).copy_from(&block);
        off += s;
    }
    out
}

/// The factorisation `A = A₁A₂` with `A₁ = e^{G₁}` of positive spectrum and
/// `A₂ = e^{G₂} = ±1` on generalized eigenspaces.
#[derive(Clone, Debug, PartialEq)]
pub struct SignSplit {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
}

/// Split off the sign of the negative eigenvalues.
///
/// In the Jordan basis of `A`, `A₂` is `−1` on every coordinate of a
/// negative-eigenvalue block and `+1` elsewhere, so it commutes with anything
/// block diagonal, `A₁` in particular. The `−1` coordinates are paired into
/// planes on which `G₂` rotates by π; an even count is forced by `det A = 1`.
pub fn split_sign(a: &MonodromyMatrix, spec: &SpectralData) -> Result<SignSplit> {
    if spec.kind != SpectrumKind::AllReal {
        return Err(Error::NotRealSpectrum);
    }
    let n = a.n();
    let af = a.to_f64();
    let mut eigs: Vec<(f64, usize)> = Vec::new();
    for z in &spec.eigenvalues {
        match eigs.last_mut() {
            Some(last) if last.0 == z.re => last.1 += 1,
            _ => eigs.push((z.re, 1)),
        }
    }
    let rj = real_jordan(&af, &eigs)?;
    let mut negative = Vec::new();
    let mut d = vec![1.0; n];
    for (off, &(mu, s)) in rj.offsets().into_iter().zip(&rj.blocks) {
        if mu < 0.0 {
            d[off..off + s].fill(-1.0);
            negative.extend(off..off + s);
        }
    }
    if negative.len() % 2 == 1 {
        return Err(Error::SignPairingUnsupported(format!(
            "{} coordinates with negative eigenvalue",
            negative.len()
        )));
    }
    let dmat = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
    let mut rot = DMatrix::zeros(n, n);
    for pair in negative.chunks(2) {
        rot[(pair[0], pair[1])] = -PI;
        rot[(pair[1], pair[0])] = PI;
    }
    // log of J·D: each negative block becomes |μ|E − N.
    let mut log_j = DMatrix::zeros(n, n);
    for (off, &(mu, s)) in rj.offsets().into_iter().zip(&rj.blocks) {
        let sub = if mu < 0.0 { -1.0 } else { 1.0 };
        log_j.view_mut((off, off), (s, s)).copy_from(&log_jordan(&[(mu, s)], sub));
    }
    let p = &rj.basis;
    let pinv = &rj.basis_inverse;
    let a2 = p * &dmat * pinv;
    let a1 = &af * &a2;
    Ok(SignSplit { a1, a2, g1: p * log_j * pinv, g2: p * rot * pinv })
}

/// Generators for a 2×2 finite-order rotation: `G₁ = θ·Q J Q⁻¹`, `G₂ = 0`.
fn rotation_generators(a: &MonodromyMatrix, spec: &SpectralData) -> (DMatrix<f64>, DMatrix<f64>) {
    let mu = spec.eigenvalues.iter().copied().find(|z| z.im > 0.0).expect("upper eigenvalue");
    let (q, qinv) = matrix_lab::rotation_basis(&a.to_f64(), mu);
    let theta = mu.arg();
    let j = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]);
    (&q * j * qinv, DMatrix::zeros(2, 2))
}

fn check_ghat(ghat: &DMatrix<f64>, n: usize) -> Result<()> {
    if ghat.nrows() != n || ghat.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: ghat.nrows() });
    }
    if (ghat - ghat.transpose()).amax() > SYMMETRY_TOL {
        return Err(Error::InvalidInput("Ĝ is not symmetric".into()));
    }
    if Cholesky::new(ghat.clone()).is_none() {
        return Err(Error::InvalidInput("Ĝ is not positive definite".into()));
    }
    Ok(())
}

/// Metric and inverse metric with their `z`-derivatives at one height.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricAt {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub dg: DMatrix<f64>,
    pub dginv: DMatrix<f64>,
}

/// Inverse metric with its first two `z`-derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseMetricJet {
    pub ginv: DMatrix<f64>,
    pub dginv: DMatrix<f64>,
    pub d2ginv: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricCurve {
    a: MonodromyMatrix,
    /// `X_lattice = frame · x_local`.
    frame: DMatrix<f64>,
    frame_inverse: DMatrix<f64>,
    /// `frame⁻¹ A frame` and its inverse.
    monodromy: DMatrix<f64>,
    monodromy_inverse: DMatrix<f64>,
    g1: DMatrix<f64>,
    g2: DMatrix<f64>,
    ghat: DMatrix<f64>,
    ghat_inverse: DMatrix<f64>,
    k1: DMatrix<f64>,
    k2: DMatrix<f64>,
}

impl MetricCurve {
    /// Curve in lattice coordinates with the given Ĝ (identity if `None`).
    pub fn new(a: &MonodromyMatrix, ghat: Option<DMatrix<f64>>) -> Result<Self> {
        let spec = matrix_lab::spectrum(a)?;
        Self::from_spectrum(a, &spec, ghat)
    }

    pub fn from_spectrum(a: &MonodromyMatrix, spec: &SpectralData, ghat: Option<DMatrix<f64>>) -> Result<Self> {
        let n = a.n();
        let ghat = ghat.unwrap_or_else(|| DMatrix::identity(n, n));
        check_ghat(&ghat, n)?;
        let (g1, g2) = match spec.kind {
            SpectrumKind::AllReal => {
                let positive = spec.eigenvalues.iter().all(|z| z.re > 0.0);
                if positive {
                    let eigs = group(spec);
                    let rj = real_jordan(&a.to_f64(), &eigs)?;
                    (&rj.basis * log_jordan(&rj.blocks, 1.0) * &rj.basis_inverse, DMatrix::zeros(n, n))
                } else {
                    let s = split_sign(a, spec)?;
                    (s.g1, s.g2)
                }
            }
            SpectrumKind::ComplexUnitCircle => rotation_generators(a, spec),
            SpectrumKind::Mixed => return Err(Error::MixedSpectrumUnsupported { n }),
        };
        let id = DMatrix::identity(n, n);
        Self::assemble(a.clone(), id.clone(), id, a.to_f64(), a.inverse().to_f64(), g1, g2, ghat)
    }

    /// Curve in the Jordan frame of the dual action (real spectrum only).
    ///
    /// The local monodromy is set to `J⁻ᵀ` so that the deck action on local
    /// momenta is exactly the Jordan form. `ghat` is given in lattice
    /// coordinates (identity if `None`).
    pub fn eigenframe(a: &MonodromyMatrix, ghat: Option<DMatrix<f64>>) -> Result<Self> {
        let spec = matrix_lab::spectrum(a)?;
        if spec.kind != SpectrumKind::AllReal {
            return Err(Error::NotRealSpectrum);
        }
        let n = a.n();
        let ghat = ghat.unwrap_or_else(|| DMatrix::identity(n, n));
        check_ghat(&ghat, n)?;
        let frame = spec.basis_inverse.transpose();
        let frame_inverse = spec.basis.transpose();
        let jinv = spec.dual_form.clone().try_inverse().expect("Jordan form is invertible");
        let monodromy = jinv.transpose();
        let monodromy_inverse = spec.dual_form.transpose();
        let mut ghat_local = frame.transpose() * &ghat * &frame;
        ghat_local = (&ghat_local + ghat_local.transpose()) * 0.5;
        snap_identity(&mut ghat_local);
        // G₁ = log of the local monodromy, which is upper bidiagonal with the
        // reciprocal eigenvalues; for negative spectra split off the sign.
        let (g1, g2) = local_generators(&monodromy, &spec)?;
        Self::assemble(a.clone(), frame, frame_inverse, monodromy, monodromy_inverse, g1, g2, ghat_local)
    }

    /// The SOL model: eigenframe of `[[2,1],[1,1]]` with Ĝ = E, coordinates
    /// `(u, v)` and `G(z) = diag(λ^{2z}, λ^{−2z})`.
    pub fn sol_model() -> Self {
        let a = matrix_lab::validate_monodromy(&[vec![2, 1], vec![1, 1]]).expect("cat map");
        Self::eigenframe(&a, None).expect("cat map is hyperbolic")
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        a: MonodromyMatrix,
        frame: DMatrix<f64>,
        frame_inverse: DMatrix<f64>,
        monodromy: DMatrix<f64>,
        monodromy_inverse: DMatrix<f64>,
        g1: DMatrix<f64>,
        g2: DMatrix<f64>,
        ghat: DMatrix<f64>,
    ) -> Result<Self> {
        let ghat_inverse = ghat.clone().try_inverse().ok_or_else(|| Error::InvalidInput("Ĝ is singular".into()))?;
        let k1 = &g1 + &g2;
        let k2 = &g1 * &k1 + &k1 * &g2;
        let curve = MetricCurve { a, frame, frame_inverse, monodromy, monodromy_inverse, g1, g2, ghat, ghat_inverse, k1, k2 };
        let resid = (expm(&curve.g1) * expm(&curve.g2) - &curve.monodromy).amax();
        if resid > 1e-9 * curve.monodromy.amax().max(1.0) {
            return Err(Error::InvalidInput(format!("e^G1 e^G2 misses A by {resid:e}")));
        }
        Ok(curve)
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn a(&self) -> &MonodromyMatrix {
        &self.a
    }

    pub fn g1(&self) -> &DMatrix<f64> {
        &self.g1
    }

    pub fn g2(&self) -> &DMatrix<f64> {
        &self.g2
    }

    /// Ĝ in local coordinates.
    pub fn ghat(&self) -> &DMatrix<f64> {
        &self.ghat
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn frame_inverse(&self) -> &DMatrix<f64> {
        &self.frame_inverse
    }

    /// Monodromy in local coordinates.
    pub fn monodromy(&self) -> &DMatrix<f64> {
        &self.monodromy
    }

    /// Inverse of the local monodromy.
    pub fn monodromy_inverse(&self) -> &DMatrix<f64> {
        &self.monodromy_inverse
    }

    pub fn is_lattice_frame(&self) -> bool {
        self.frame == DMatrix::identity(self.n(), self.n())
    }

    /// `A₁ = e^{G₁}`, `A₂ = e^{G₂}`.
    pub fn factors(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (expm(&self.g1), expm(&self.g2))
    }

    fn has_g2(&self) -> bool {
        self.g2.iter().any(|&x| x != 0.0)
    }

    fn exp_pair(&self, z: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.n();
        let e1 = expm(&(&self.g1 * z));
        let e2 = if self.has_g2() { expm(&(&self.g2 * z)) } else { DMatrix::identity(n, n) };
        (e1, e2)
    }

    /// `γ(z) = e^{−zG₂} e^{−zG₁}`.
    pub fn gamma(&self, z: f64) -> DMatrix<f64> {
        let (e1, e2) = self.exp_pair(-z);
        e2 * e1
    }

    /// `dγ/dz = −G₂γ − e^{−zG₂} G₁ e^{−zG₁}`.
    pub fn gamma_derivative(&self, z: f64) -> DMatrix<f64> {
        let (e1, e2) = self.exp_pair(-z);
        -(&e2 * (&self.k1) * e1)
    }

    /// `γ(z)⁻¹ = e^{zG₁} e^{zG₂}` and its first two derivatives.
    fn gamma_inverse_jet(&self, z: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let (e1, e2) = self.exp_pair(z);
        let m = &e1 * &e2;
        let dm = &e1 * &self.k1 * &e2;
        let d2m = &e1 * &self.k2 * &e2;
        (m, dm, d2m)
    }

    pub fn metric_at(&self, z: f64) -> MetricAt {
        let gamma = self.gamma(z);
        let dgamma = self.gamma_derivative(z);
        let g = sym(&(gamma.transpose() * &self.ghat * &gamma));
        let gd = dgamma.transpose() * &self.ghat * &gamma;
        let dg = &gd + gd.transpose();
        let jet = self.inverse_metric(z);
        MetricAt { g, ginv: jet.ginv, dg, dginv: jet.dginv }
    }

    /// `G⁻¹ = M Ĝ⁻¹ Mᵀ` with `M = γ⁻¹`, and analytic `z`-derivatives.
    pub fn inverse_metric(&self, z: f64) -> InverseMetricJet {
        let (m, dm, d2m) = self.gamma_inverse_jet(z);
        let hm = &self.ghat_inverse * m.transpose();
        let ginv = sym(&(&m * &hm));
        let t1 = &dm * &hm;
        let dginv = &t1 + t1.transpose();
        let hdm = &self.ghat_inverse * dm.transpose();
        let t2 = &d2m * &hm;
        let d2ginv = &t2 + t2.transpose() + (&dm * hdm) * 2.0;
        InverseMetricJet { ginv, dginv, d2ginv }
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn snap_identity(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    if (&*m - DMatrix::<f64>::identity(n, n)).amax() < 1e-12 {
        *m = DMatrix::identity(n, n);
    }
}

fn group(spec: &SpectralData) -> Vec<(f64, usize)> {
    let mut eigs: Vec<(f64, usize)> = Vec::new();
    for z in &spec.eigenvalues {
        match eigs.last_mut() {
            Some(last) if last.0 == z.re => last.1 += 1,
            _ => eigs.push((z.re, 1)),
        }
    }
    eigs
}

/// Generators for the local monodromy `J⁻ᵀ`, block diagonal in the frame.
///
/// Each block of `J⁻ᵀ` is `μ⁻¹(E + N/μ)⁻ᵀ`; exponentiating a logarithm
/// must reproduce it, which the caller checks.
fn local_generators(monodromy: &DMatrix<f64>, spec: &SpectralData) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = monodromy.nrows();
    let mut g1 = DMatrix::zeros(n, n);
    let mut d = vec![1.0; n];
    let mut negative = Vec::new();
    let mut off = 0;
    for b in &spec.jordan_blocks {
        let s = b.size;
        let block = monodromy.view((off, off), (s, s)).into_owned();
        let sign = if b.eigenvalue.re < 0.0 { -1.0 } else { 1.0 };
        let positive = &block * sign;
        let log = if s == 1 {
            DMatrix::from_element(1, 1, positive[(0, 0)].ln())
        } else {
            log_unipotent_scaled(&positive)
        };
        g1.view_mut((off, off), (s, s)).copy_from(&log);
        if sign < 0.0 {
            d[off..off + s].fill(-1.0);
            negative.extend(off..off + s);
        }
        off += s;
    }
    if negative.len() % 2 == 1 {
        return Err(Error::SignPairingUnsupported(format!("{} coordinates with negative eigenvalue", negative.len())));
    }
    let mut g2 = DMatrix::zeros(n, n);
    for pair in negative.chunks(2) {
        g2[(pair[0], pair[1])] = -PI;
        g2[(pair[1], pair[0])] = PI;
    }
    Ok((g1, g2))
}

/// `log(B)` for `B = c(E + U)` with `U` nilpotent triangular and `c > 0`.
fn log_unipotent_scaled(b: &DMatrix<f64>) -> DMatrix<f64> {
    let s = b.nrows();
    let c = b[(0, 0)];
    let u = b / c - DMatrix::identity(s, s);
    let mut out = DMatrix::identity(s, s) * c.ln();
    let mut power = DMatrix::identity(s, s);
    for k in 1..s {
        power = &power * &u;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        out += &power * (sign / k as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_lab::{spectrum, validate_monodromy};

    fn m(rows: &[&[i64]]) -> MonodromyMatrix {
        validate_monodromy(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn log_examples() {
        let l = (3.0 + 5f64.sqrt()) / 2.0;
        let d = DMatrix::from_row_slice(2, 2, &[l, 0.0, 0.0, 1.0 / l]);
        let g = matrix_log_positive(&d).unwrap();
        assert!((g - DMatrix::from_row_slice(2, 2, &[l.ln(), 0.0, 0.0, -l.ln()])).amax() < 1e-14);
        assert_eq!(matrix_log_positive(&DMatrix::identity(3, 3)).unwrap(), DMatrix::zeros(3, 3));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let g = matrix_log_positive(&b).unwrap();
        assert!((g - DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).amax() < 1e-14);
        let neg = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(matrix_log_positive(&neg), Err(Error::NonPositiveSpectrum(_))));
    }

    #[test]
    fn split_of_minus_identity() {
        let a = m(&[&[-1, 0], &[0, -1]]);
        let s = split_sign(&a, &spectrum(&a).unwrap()).unwrap();
        assert!((s.a1 - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
        assert!((&s.a2 + DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
        assert!((expm(&s.g2) - &s.a2).amax() < 1e-14);
        assert!((&s.g2 + s.g2.transpose()).amax() < 1e-14);
    }

    #[test]
    fn split_of_positive_spectrum_is_trivial() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let s = split_sign(&a, &spectrum(&a).unwrap()).unwrap();
        assert!((s.a1 - a.to_f64()).amax() < 1e-12);
        assert!((s.a2 - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn butler_gamma() {
        let c = MetricCurve::new(&m(&[&[1, 1], &[0, 1]]), None).unwrap();
        let g = c.gamma(0.5);
        assert!((g - DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 0.0, 1.0])).amax() < 1e-14);
    }

    #[test]
    fn sol_metric_is_diagonal() {
        let c = MetricCurve::sol_model();
        let l = (3.0 + 5f64.sqrt()) / 2.0;
        assert_eq!(c.ghat(), &DMatrix::<f64>::identity(2, 2));
        for z in [-1.3, 0.0, 0.4, 2.2] {
            let g = c.metric_at(z).g;
            let want = DMatrix::from_row_slice(2, 2, &[l.powf(2.0 * z), 0.0, 0.0, l.powf(-2.0 * z)]);
            assert!((g - &want).amax() < 1e-12 * want.amax());
        }
    }

    #[test]
    fn rotation_curve() {
        let a = m(&[&[0, -1], &[1, 0]]);
        let c = MetricCurve::new(&a, None).unwrap();
        let r = c.gamma(1.0) - a.inverse().to_f64();
        assert!(r.amax() < 1e-14);
    }
}
