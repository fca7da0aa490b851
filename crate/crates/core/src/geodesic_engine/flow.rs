//! Hamiltonian geodesic flow on the cylinder `Tⁿ × ℝ` and on its quotient.
//!
//! All coordinates are in the local frame of the [`MetricCurve`]:
//! `X_lattice = frame · x` and `p_lattice = frame⁻ᵀ · p`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ode::{self, OdeOptions, OdeStats};
use crate::curve_factory::MetricCurve;
use crate::{Error, Result};

/// Unit-bundle tolerance on `|2H − 1|`.
pub const UNIT_BUNDLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub z: f64,
    pub p: Vec<f64>,
    pub pz: f64,
    pub t: f64,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, z: f64, p: Vec<f64>, pz: f64) -> Result<Self> {
        if x.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: p.len() });
        }
        let s = PhaseState { x, z, p, pz, t: 0.0 };
        if !s.is_finite() {
            return Err(Error::InvalidInput("phase state has non-finite coordinates".into()));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.p).all(|v| v.is_finite()) && self.z.is_finite() && self.pz.is_finite() && self.t.is_finite()
    }

    /// Rescale all momenta so that `H = 1/2`.
    pub fn normalized(mut self, curve: &MetricCurve) -> Result<Self> {
        let h = hamiltonian(&self, curve);
        if h <= 0.0 {
            return Err(Error::InvalidInput("cannot normalise a state with zero momenta".into()));
        }
        let c = (2.0 * h).sqrt().recip();
        self.p.iter_mut().for_each(|v| *v *= c);
        self.pz *= c;
        Ok(self)
    }

    pub fn unit_defect(&self, curve: &MetricCurve) -> f64 {
        (2.0 * hamiltonian(self, curve) - 1.0).abs()
    }

    /// `[x, z, p, p_z]`.
    pub fn pack(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * self.n() + 2);
        y.extend_from_slice(&self.x);
        y.push(self.z);
        y.extend_from_slice(&self.p);
        y.push(self.pz);
        y
    }

    pub fn unpack(y: &[f64], t: f64) -> Self {
        let n = (y.len() - 2) / 2;
        PhaseState { x: y[..n].to_vec(), z: y[n], p: y[n + 1..2 * n + 1].to_vec(), pz: y[2 * n + 1], t }
    }

    /// Reverse all momenta.
    pub fn reversed(&self) -> Self {
        let mut s = self.clone();
        s.p.iter_mut().for_each(|v| *v = -*v);
        s.pz = -s.pz;
        s
    }
}

/// `H = ½(pᵀ G⁻¹(z) p + p_z²)`.
pub fn hamiltonian(s: &PhaseState, curve: &MetricCurve) -> f64 {
    let ginv = curve.inverse_metric(s.z).ginv;
    let p = DVector::from_column_slice(&s.p);
    0.5 * (p.dot(&(&ginv * &p)) + s.pz * s.pz)
}

fn eom_packed(curve: &MetricCurve, y: &[f64], dy: &mut [f64]) {
    let n = (y.len() - 2) / 2;
    let z = y[n];
    let p = DVector::from_column_slice(&y[n + 1..2 * n + 1]);
    let jet = curve.inverse_metric(z);
    let xdot = &jet.ginv * &p;
    dy[..n].copy_from_slice(xdot.as_slice());
    dy[n] = y[2 * n + 1];
    dy[n + 1..2 * n + 1].iter_mut().for_each(|v| *v = 0.0);
    dy[2 * n + 1] = -0.5 * p.dot(&(&jet.dginv * &p));
}

/// Hamilton's equations: `ẋ = ∂H/∂p`, `ż = ∂H/∂p_z`, `ṗ = −∂H/∂x = 0`,
/// `ṗ_z = −∂H/∂z`. Returned packed as `[ẋ, ż, ṗ, ṗ_z]`.
pub fn equations_of_motion(s: &PhaseState, curve: &MetricCurve) -> Vec<f64> {
    let y = s.pack();
    let mut dy = vec![0.0; y.len()];
    eom_packed(curve, &y, &mut dy);
    dy
}

/// Jacobian of [`equations_of_motion`] in packed coordinates.
pub fn jacobian(s: &PhaseState, curve: &MetricCurve) -> DMatrix<f64> {
    let n = s.n();
    let p = DVector::from_column_slice(&s.p);
    let jet = curve.inverse_metric(s.z);
    let dgp = &jet.dginv * &p;
    let mut j = DMatrix::zeros(2 * n + 2, 2 * n + 2);
    for i in 0..n {
        j[(i, n)] = dgp[i];
        for k in 0..n {
            j[(i, n + 1 + k)] = jet.ginv[(i, k)];
        }
        j[(2 * n + 1, n + 1 + i)] = -dgp[i];
    }
    j[(n, 2 * n + 1)] = 1.0;
    j[(2 * n + 1, n)] = -0.5 * p.dot(&(&jet.d2ginv * &p));
    j
}

/// Packed right-hand side for the state together with `m` tangent vectors
/// stored column-wise after it.
pub(crate) fn variational_rhs(curve: &MetricCurve, m: usize, y: &[f64], dy: &mut [f64]) {
    let d = y.len() / (m + 1);
    eom_packed(curve, &y[..d], &mut dy[..d]);
    let j = jacobian(&PhaseState::unpack(&y[..d], 0.0), curve);
    for c in 0..m {
        let v = &y[d * (c + 1)..d * (c + 2)];
        let out = &mut dy[d * (c + 1)..d * (c + 2)];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..d).map(|k| j[(r, k)] * v[k]).sum();
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub evaluations: usize,
    /// `max |H(t) − H(0)| / H(0)` over samples.
    pub max_energy_drift: f64,
    /// `max_i |p_i(t) − p_i(0)|` over samples (cylinder segments only).
    pub max_momentum_drift: f64,
    /// Configured ceiling for both drifts, `100 · tol`.
    pub drift_bound: f64,
}

impl Diagnostics {
    pub fn within_bound(&self) -> bool {
        self.max_energy_drift <= self.drift_bound && self.max_momentum_drift <= self.drift_bound
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    /// Time-ordered samples (ascending `t`, also for backward runs).
    pub samples: Vec<PhaseState>,
    /// The state at `t₀ + T`.
    pub end: PhaseState,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    /// Column names `t, x1.., z, p1.., pz, H` and one row per sample.
    pub fn table(&self, curve: &MetricCurve) -> (Vec<String>, Vec<Vec<f64>>) {
        let n = curve.n();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.push("z".into());
        header.extend((1..=n).map(|i| format!("p{i}")));
        header.extend(["pz".to_string(), "H".to_string()]);
        let rows = self
            .samples
            .iter()
            .map(|s| {
                let mut row = vec![s.t];
                row.extend(&s.x);
                row.push(s.z);
                row.extend(&s.p);
                row.extend([s.pz, hamiltonian(s, curve)]);
                row
            })
            .collect();
        (header, rows)
    }
}

/// Sampling options beyond the tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleOptions {
    /// Uniform sampling interval from the dense output; every accepted step
    /// when `None`.
    pub dt: Option<f64>,
}

/// Integrate the cylinder flow for time `t_span` (may be negative).
pub fn integrate(s0: &PhaseState, curve: &MetricCurve, t_span: f64, tol: f64) -> Result<Trajectory> {
    integrate_sampled(s0, curve, t_span, tol, SampleOptions { dt: None })
}

pub fn integrate_sampled(
    s0: &PhaseState,
    curve: &MetricCurve,
    t_span: f64,
    tol: f64,
    sampling: SampleOptions,
) -> Result<Trajectory> {
    let opts = OdeOptions::with_tol(tol)?;
    check_state(s0, curve)?;
    if !t_span.is_finite() {
        return Err(Error::InvalidInput("time horizon must be finite".into()));
    }
    let mut samples = vec![s0.clone()];
    let (end, stats) = run_segment(s0, curve, t_span, &opts, sampling.dt, |s| samples.push(s))?;
    if t_span < 0.0 {
        samples.reverse();
    }
    let mut diagnostics = Diagnostics { drift_bound: 100.0 * tol, ..Default::default() };
    record(&mut diagnostics, &stats);
    let h0 = hamiltonian(s0, curve);
    for s in &samples {
        track_drift(&mut diagnostics, s0, s, h0, curve, true);
    }
    Ok(Trajectory { samples, end, diagnostics })
}

fn check_state(s: &PhaseState, curve: &MetricCurve) -> Result<()> {
    if s.n() != curve.n() || s.p.len() != curve.n() {
        return Err(Error::DimensionMismatch { expected: curve.n(), got: s.n() });
    }
    if !s.is_finite() {
        return Err(Error::InvalidInput("phase state has non-finite coordinates".into()));
    }
    Ok(())
}

fn record(d: &mut Diagnostics, stats: &OdeStats) {
    d.accepted_steps += stats.accepted;
    d.rejected_steps += stats.rejected;
    d.evaluations += stats.evaluations;
}

fn track_drift(d: &mut Diagnostics, s0: &PhaseState, s: &PhaseState, h0: f64, curve: &MetricCurve, momenta: bool) {
    let h = hamiltonian(s, curve);
    let rel = if h0 > 0.0 { (h - h0).abs() / h0 } else { (h - h0).abs() };
    d.max_energy_drift = d.max_energy_drift.max(rel);
    if momenta {
        let dp = s0.p.iter().zip(&s.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        d.max_momentum_drift = d.max_momentum_drift.max(dp);
    }
}

/// One cylinder segment; `emit` receives every sample after the initial one.
fn run_segment(
    s0: &PhaseState,
    curve: &MetricCurve,
    t_span: f64,
    opts: &OdeOptions,
    dt: Option<f64>,
    mut emit: impl FnMut(PhaseState),
) -> Result<(PhaseState, OdeStats)> {
    let t0 = s0.t;
    let t_end = t0 + t_span;
    let y0 = s0.pack();
    let dir = t_span.signum();
    let mut next_sample = dt.map(|d| t0 + dir * d.abs());
    let mut buf = vec![0.0; y0.len()];
    let (y, stats) = ode::integrate(
        |_, y, dy| eom_packed(curve, y, dy),
        t0,
        &y0,
        t_end,
        opts,
        |step, y_new| match (dt, next_sample.as_mut()) {
            (Some(d), Some(ts)) => {
                while (step.t_new() - *ts) * dir >= -1e-12 * d.abs() && (*ts - t_end) * dir <= 1e-12 * d.abs() {
                    step.eval(*ts, &mut buf);
                    emit(PhaseState::unpack(&buf, *ts));
                    *ts += dir * d.abs();
                }
            }
            _ => emit(PhaseState::unpack(y_new, step.t_new())),
        },
    )?;
    Ok((PhaseState::unpack(&y, t_end), stats))
}

/// Wrap lattice coordinates `frame · x` into `[0,1)ⁿ`.
fn wrap_fiber(x: &[f64], curve: &MetricCurve) -> Vec<f64> {
    let xl = curve.frame() * DVector::from_column_slice(x);
    let wrapped = xl.map(|v| v - v.floor());
    (curve.frame_inverse() * wrapped).as_slice().to_vec()
}

/// Representative with `z ∈ [0,1)` and lattice fiber coordinates in
/// `[0,1)ⁿ`.
///
/// The deck generator is `φ(x, z, p) = (Ax, z+1, Ãp)` in the gluing
/// `(X, z) ~ (AX, z+1)`, under which `G(z+1) = A⁻ᵀ G(z) A⁻¹` makes `φ` an
/// isometry. `z ≥ 1` is lowered by `φ⁻¹ = (A⁻¹x, z−1, Aᵀp)`, `z < 0` is
/// raised by `φ`.
pub fn reduce_mod_deck(s: &PhaseState, curve: &MetricCurve) -> PhaseState {
    reduce_with_tangents(s, curve, &mut [])
}

/// [`reduce_mod_deck`] also pushing packed tangent vectors through the
/// differential `diag(A^{∓1}, 1, Ã^{∓1}, 1)` of the applied deck steps.
pub fn reduce_with_tangents(s: &PhaseState, curve: &MetricCurve, tangents: &mut [Vec<f64>]) -> PhaseState {
    let m = curve.monodromy();
    let minv = curve.monodromy_inverse();
    let mt = m.transpose();
    let minvt = minv.transpose();
    let n = s.n();
    let mut x = DVector::from_column_slice(&s.x);
    let mut p = DVector::from_column_slice(&s.p);
    let mut z = s.z;
    let apply = |v: &mut Vec<f64>, ax: &DMatrix<f64>, ap: &DMatrix<f64>| {
        let vx = ax * DVector::from_column_slice(&v[..n]);
        let vp = ap * DVector::from_column_slice(&v[n + 1..2 * n + 1]);
        v[..n].copy_from_slice(vx.as_slice());
        v[n + 1..2 * n + 1].copy_from_slice(vp.as_slice());
    };
    while z >= 1.0 {
        x = minv * x;
        p = &mt * p;
        z -= 1.0;
        tangents.iter_mut().for_each(|v| apply(v, minv, &mt));
    }
    while z < 0.0 {
        x = m * x;
        p = &minvt * p;
        z += 1.0;
        tangents.iter_mut().for_each(|v| apply(v, m, &minvt));
    }
    if z >= 1.0 {
        z = 0.0;
    }
    PhaseState { x: wrap_fiber(x.as_slice(), curve), z, p: p.as_slice().to_vec(), pz: s.pz, t: s.t }
}

/// Integrate on the quotient: unit-time cylinder segments, each followed by
/// [`reduce_mod_deck`]. Samples are reduced states at the segment ends.
pub fn integrate_quotient(s0: &PhaseState, curve: &MetricCurve, t_span: f64, tol: f64) -> Result<Trajectory> {
    let opts = OdeOptions::with_tol(tol)?;
    check_state(s0, curve)?;
    let start = reduce_mod_deck(s0, curve);
    let h0 = hamiltonian(&start, curve);
    let mut diagnostics = Diagnostics { drift_bound: 100.0 * tol, ..Default::default() };
    let mut samples = vec![start.clone()];
    let mut s = start.clone();
    let dir = t_span.signum();
    let mut remaining = t_span.abs();
    let mut h_next = None;
    while remaining > 0.0 {
        let chunk = remaining.min(1.0);
        let seg_opts = OdeOptions { h_init: h_next, ..opts };
        let (end, stats) = run_segment(&s, curve, dir * chunk, &seg_opts, None, |_| {})?;
        record(&mut diagnostics, &stats);
        h_next = Some(stats.h_next.abs()).filter(|h| *h > 0.0);
        // Momenta change with each deck step, so only energy is tracked here.
        s = reduce_mod_deck(&end, curve);
        track_drift(&mut diagnostics, &start, &s, h0, curve, false);
        samples.push(s.clone());
        remaining -= chunk;
    }
    if dir < 0.0 {
        samples.reverse();
    }
    Ok(Trajectory { samples, end: s, diagnostics })
}

/// Uniform fiber point, `z ∈ [0,1)`, Gaussian momenta normalised to `H = 1/2`.
pub fn random_unit_state<R: Rng + ?Sized>(curve: &MetricCurve, rng: &mut R) -> PhaseState {
    let n = curve.n();
    loop {
        let xl: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let x = (curve.frame_inverse() * DVector::from_vec(xl)).as_slice().to_vec();
        let z = rng.random::<f64>();
        let p: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
        let pz = gaussian(rng);
        let s = PhaseState { x, z, p, pz, t: 0.0 };
        if let Ok(s) = s.normalized(curve) {
            return s;
        }
    }
}

pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
