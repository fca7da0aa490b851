//! Lyapunov spectra by the discrete-QR (Benettin) scheme.
//!
//! The tangent flow is integrated alongside the base flow on `2n+1` vectors
//! spanning `ker dH`, the tangent space of the energy shell. Every `Δt` of
//! flow time the state is reduced mod deck (pushing the vectors through the
//! deck differential) and the vectors are re-orthonormalised in the split
//! metric `|v|² = v_xᵀG v_x + v_z² + v_pᵀG⁻¹v_p + v_{p_z}²`, for which deck
//! transformations are isometries.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curve_factory::MetricCurve;
use crate::geodesic_engine::flow::variational_rhs;
use crate::geodesic_engine::ode::{self, OdeOptions};
use crate::geodesic_engine::{reduce_with_tangents, Energy, PhaseFunction, PhaseState};
use crate::{Error, Result};

pub const MIN_HORIZON: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovOptions {
    pub tol: f64,
    /// Re-orthonormalisation interval `Δt`.
    pub interval: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        LyapunovOptions { tol: 1e-9, interval: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LyapunovReport {
    /// Ascending, per unit time.
    pub exponents: Vec<f64>,
    pub horizon: f64,
    pub interval: f64,
    pub tol: f64,
    /// Per-exponent variance of the running estimates over the last tenth
    /// of the horizon.
    pub residuals: Vec<f64>,
    /// Running estimates `(t, exponents)` after every interval.
    pub history: Vec<(f64, Vec<f64>)>,
    pub final_state: PhaseState,
}

impl LyapunovReport {
    pub fn top(&self) -> f64 {
        *self.exponents.last().expect("non-empty spectrum")
    }

    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }

    /// Exponent closest to zero (the flow direction).
    pub fn flow_exponent(&self) -> f64 {
        self.exponents.iter().copied().fold(f64::INFINITY, |a, b| if b.abs() < a.abs() { b } else { a })
    }

    pub fn max_abs(&self) -> f64 {
        self.exponents.iter().fold(0.0, |a, b| a.max(b.abs()))
    }
}

/// Split metric `W = diag(G, 1, G⁻¹, 1)`.
fn split_metric(curve: &MetricCurve, z: f64) -> DMatrix<f64> {
    let n = curve.n();
    let m = curve.metric_at(z);
    let d = 2 * n + 2;
    let mut w = DMatrix::zeros(d, d);
    w.view_mut((0, 0), (n, n)).copy_from(&m.g);
    w[(n, n)] = 1.0;
    w.view_mut((n + 1, n + 1), (n, n)).copy_from(&m.ginv);
    w[(d - 1, d - 1)] = 1.0;
    w
}

fn cholesky_upper(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let c = nalgebra::Cholesky::new(w.clone()).ok_or_else(|| Error::InvalidInput("split metric not positive".into()))?;
    Ok(c.l().transpose())
}

/// W-orthonormal basis of `ker dH` at `s`.
fn shell_basis(s: &PhaseState, curve: &MetricCurve) -> Result<Vec<Vec<f64>>> {
    let n = s.n();
    let d = 2 * n + 2;
    let j = Energy.jet(s, curve)?;
    let grad: Vec<f64> = j.dx.iter().chain([&j.dz]).chain(&j.dp).chain([&j.dpz]).copied().collect();
    let w = split_metric(curve, s.z);
    let winv = w.clone().try_inverse().expect("split metric invertible");
    // W-gradient of H spans the W-orthogonal complement of ker dH.
    let normal = &winv * DVector::from_vec(grad);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let ip = |a: &DVector<f64>, b: &DVector<f64>| a.dot(&(&w * b));
    let mut candidates = vec![normal];
    candidates.extend((0..d).map(|k| DVector::from_fn(d, |i, _| if i == k { 1.0 } else { 0.0 })));
    let mut kept = Vec::new();
    for (idx, mut v) in candidates.into_iter().enumerate() {
        for b in &basis {
            let c = ip(b, &v);
            v -= b * c;
        }
        let nv = ip(&v, &v).sqrt();
        if nv > 1e-8 {
            let v = v / nv;
            basis.push(v.clone());
            if idx > 0 {
                kept.push(v.as_slice().to_vec());
            }
        }
        if kept.len() == d - 1 {
            break;
        }
    }
    if basis.is_empty() || kept.len() != d - 1 {
        return Err(Error::InvalidInput("zero-momentum state has no energy shell".into()));
    }
    Ok(kept)
}

/// W-orthonormalise in place and return `log |R_kk|`.
fn qr_step(vectors: &mut [Vec<f64>], curve: &MetricCurve, z: f64) -> Result<Vec<f64>> {
    let d = vectors[0].len();
    let m = vectors.len();
    let u = cholesky_upper(&split_metric(curve, z))?;
    let mut a = DMatrix::zeros(d, m);
    for (c, v) in vectors.iter().enumerate() {
        a.set_column(c, &(&u * DVector::from_column_slice(v)));
    }
    let qr = a.qr();
    let r = qr.r();
    let q = qr.q();
    let uinv = u.try_inverse().expect("Cholesky factor invertible");
    let mut logs = Vec::with_capacity(m);
    for c in 0..m {
        let sign = if r[(c, c)] < 0.0 { -1.0 } else { 1.0 };
        logs.push(r[(c, c)].abs().ln());
        let col = &uinv * q.column(c) * sign;
        vectors[c].copy_from_slice(col.as_slice());
    }
    Ok(logs)
}

pub fn lyapunov_spectrum(s0: &PhaseState, curve: &MetricCurve, horizon: f64, opts: &LyapunovOptions) -> Result<LyapunovReport> {
    if !horizon.is_finite() || horizon < MIN_HORIZON {
        return Err(Error::InvalidInput(format!("Lyapunov horizon must be ≥ {MIN_HORIZON}, got {horizon}")));
    }
    if opts.interval.is_nan() || opts.interval <= 0.0 {
        return Err(Error::InvalidInput("re-orthonormalisation interval must be positive".into()));
    }
    let ode_opts = OdeOptions::with_tol(opts.tol)?;
    let mut state = crate::geodesic_engine::reduce_mod_deck(s0, curve);
    let mut vectors = shell_basis(&state, curve)?;
    let m = vectors.len();
    let d = state.pack().len();
    let mut sums = vec![0.0; m];
    let mut history = Vec::new();
    let mut t = 0.0;
    let mut h_next = None;
    while t < horizon - 1e-12 {
        let dt = opts.interval.min(horizon - t);
        let mut y = state.pack();
        for v in &vectors {
            y.extend_from_slice(v);
        }
        let seg = OdeOptions { h_init: h_next, ..ode_opts };
        let (y1, stats) = ode::integrate(|_, y, dy| variational_rhs(curve, m, y, dy), 0.0, &y, dt, &seg, |_, _| {})?;
        h_next = Some(stats.h_next.abs()).filter(|h| *h > 0.0);
        t += dt;
        let end = PhaseState::unpack(&y1[..d], s0.t + t);
        for (c, v) in vectors.iter_mut().enumerate() {
            v.copy_from_slice(&y1[d * (c + 1)..d * (c + 2)]);
        }
        state = reduce_with_tangents(&end, curve, &mut vectors);
        let logs = qr_step(&mut vectors, curve, state.z)?;
        sums.iter_mut().zip(&logs).for_each(|(s, l)| *s += l);
        let mut est: Vec<f64> = sums.iter().map(|s| s / t).collect();
        est.sort_by(f64::total_cmp);
        history.push((t, est));
    }
    let exponents = history.last().map(|h| h.1.clone()).unwrap_or_default();
    let tail: Vec<&Vec<f64>> = history.iter().filter(|(ht, _)| *ht >= 0.9 * horizon).map(|(_, e)| e).collect();
    let residuals = (0..m)
        .map(|i| {
            let k = tail.len() as f64;
            let mean = tail.iter().map(|e| e[i]).sum::<f64>() / k;
            tail.iter().map(|e| (e[i] - mean).powi(2)).sum::<f64>() / k
        })
        .collect();
    Ok(LyapunovReport { exponents, horizon, interval: opts.interval, tol: opts.tol, residuals, history, final_state: state })
}
