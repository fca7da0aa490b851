//! Poisson brackets `{f, g} = Σ (∂f/∂xⁱ ∂g/∂pᵢ − ∂f/∂pᵢ ∂g/∂xⁱ) + (∂f/∂z ∂g/∂p_z − ∂f/∂p_z ∂g/∂z)`.
//!
//! Functions report scaled gradients (`value = e^{log_scale}·mantissa`) so
//! that brackets of flat integrals such as `exp(−1/Q²)·(…)` keep their
//! relative precision.

use nalgebra::{DMatrix, DVector};

use super::flow::PhaseState;
use crate::curve_factory::MetricCurve;
use crate::invariant_forge::SmoothIntegral;
use crate::{Error, Result};

/// Gradient of a phase-space function with a common scale `e^{log_scale}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseJet {
    pub log_scale: f64,
    pub value: f64,
    pub dx: Vec<f64>,
    pub dz: f64,
    pub dp: Vec<f64>,
    pub dpz: f64,
}

impl PhaseJet {
    fn zero(n: usize) -> Self {
        PhaseJet { log_scale: 0.0, value: 0.0, dx: vec![0.0; n], dz: 0.0, dp: vec![0.0; n], dpz: 0.0 }
    }

    pub fn materialize(&self) -> f64 {
        scaled(self.log_scale, self.value)
    }
}

fn scaled(log_scale: f64, v: f64) -> f64 {
    if v == 0.0 || log_scale == f64::NEG_INFINITY {
        0.0
    } else {
        v * log_scale.exp()
    }
}

/// A function on the cotangent bundle of the cylinder.
pub trait PhaseFunction {
    fn label(&self) -> String;
    fn jet(&self, s: &PhaseState, curve: &MetricCurve) -> Result<PhaseJet>;

    fn value(&self, s: &PhaseState, curve: &MetricCurve) -> Result<f64> {
        Ok(self.jet(s, curve)?.materialize())
    }
}

/// `H`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Energy;

impl PhaseFunction for Energy {
    fn label(&self) -> String {
        "H".into()
    }

    fn jet(&self, s: &PhaseState, curve: &MetricCurve) -> Result<PhaseJet> {
        let jet = curve.inverse_metric(s.z);
        let p = DVector::from_column_slice(&s.p);
        let gp = &jet.ginv * &p;
        let mut out = PhaseJet::zero(s.n());
        out.value = 0.5 * (p.dot(&gp) + s.pz * s.pz);
        out.dp = gp.as_slice().to_vec();
        out.dz = 0.5 * p.dot(&(&jet.dginv * &p));
        out.dpz = s.pz;
        Ok(out)
    }
}

/// The local momentum `p_i`.
#[derive(Clone, Copy, Debug)]
pub struct Momentum(pub usize);

impl PhaseFunction for Momentum {
    fn label(&self) -> String {
        format!("p{}", self.0 + 1)
    }

    fn jet(&self, s: &PhaseState, _curve: &MetricCurve) -> Result<PhaseJet> {
        if self.0 >= s.n() {
            return Err(Error::UnknownVariable { index: self.0, nvars: s.n() });
        }
        let mut out = PhaseJet::zero(s.n());
        out.value = s.p[self.0];
        out.dp[self.0] = 1.0;
        Ok(out)
    }
}

/// A momentum-only integral whose coordinates `T` refer to local momenta.
#[derive(Clone, Debug)]
pub struct LocalIntegral(pub SmoothIntegral);

impl LocalIntegral {
    /// Re-express an integral written in lattice momenta for the curve's
    /// local frame, where `p_lattice = frame⁻ᵀ p_local`.
    pub fn from_lattice(integral: &SmoothIntegral, curve: &MetricCurve) -> Self {
        LocalIntegral(integral.compose(&curve.frame_inverse().transpose()))
    }
}

impl PhaseFunction for LocalIntegral {
    fn label(&self) -> String {
        self.0.label.clone()
    }

    fn jet(&self, s: &PhaseState, _curve: &MetricCurve) -> Result<PhaseJet> {
        if self.0.nvars() == 0 || self.0.coords[0].len() != s.n() {
            return Err(Error::DimensionMismatch { expected: s.n(), got: self.0.coords.first().map_or(0, |r| r.len()) });
        }
        let e = self.0.evaluate(&s.p);
        if let Some(sing) = e.singular {
            return Err(Error::SingularPoint { q: sing.q });
        }
        let mut out = PhaseJet::zero(s.n());
        out.log_scale = e.jet.log_scale;
        out.value = e.jet.value;
        out.dp = e.jet.grad;
        Ok(out)
    }
}

/// Any closure, differentiated by 5-point central differences with
/// step `1e-5 · max(1, |coordinate|)`.
pub struct Numeric<F> {
    pub label: String,
    pub f: F,
}

impl<F: Fn(&PhaseState) -> f64> PhaseFunction for Numeric<F> {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn jet(&self, s: &PhaseState, _curve: &MetricCurve) -> Result<PhaseJet> {
        let y = s.pack();
        let n = s.n();
        let mut grad = vec![0.0; y.len()];
        for (k, g) in grad.iter_mut().enumerate() {
            let h = 1e-5 * y[k].abs().max(1.0);
            let at = |d: f64| {
                let mut yy = y.clone();
                yy[k] += d;
                (self.f)(&PhaseState::unpack(&yy, s.t))
            };
            *g = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
        }
        Ok(PhaseJet {
            log_scale: 0.0,
            value: (self.f)(s),
            dx: grad[..n].to_vec(),
            dz: grad[n],
            dp: grad[n + 1..2 * n + 1].to_vec(),
            dpz: grad[2 * n + 1],
        })
    }
}

/// Bracket of two jets as `(log_scale, mantissa)`.
pub fn bracket_jets(f: &PhaseJet, g: &PhaseJet) -> (f64, f64) {
    let mut m = 0.0;
    for i in 0..f.dx.len() {
        m += f.dx[i] * g.dp[i] - f.dp[i] * g.dx[i];
    }
    m += f.dz * g.dpz - f.dpz * g.dz;
    (f.log_scale + g.log_scale, m)
}

/// `{f, g}` at `s`; `SingularPoint` when either function is evaluated too
/// close to its singular set.
pub fn poisson_bracket(f: &dyn PhaseFunction, g: &dyn PhaseFunction, s: &PhaseState, curve: &MetricCurve) -> Result<f64> {
    let (ls, m) = poisson_bracket_scaled(f, g, s, curve)?;
    Ok(scaled(ls, m))
}

pub fn poisson_bracket_scaled(
    f: &dyn PhaseFunction,
    g: &dyn PhaseFunction,
    s: &PhaseState,
    curve: &MetricCurve,
) -> Result<(f64, f64)> {
    let jf = f.jet(s, curve)?;
    let jg = g.jet(s, curve)?;
    Ok(bracket_jets(&jf, &jg))
}

/// Bracket relative to the gradient sizes, `|{f,g}| / (|∇f|·|∇g|)`, which
/// is scale-free for flat integrals.
pub fn relative_bracket(f: &dyn PhaseFunction, g: &dyn PhaseFunction, s: &PhaseState, curve: &MetricCurve) -> Result<f64> {
    let jf = f.jet(s, curve)?;
    let jg = g.jet(s, curve)?;
    let (_, m) = bracket_jets(&jf, &jg);
    let norm = |j: &PhaseJet| j.dx.iter().chain(&j.dp).chain([&j.dz, &j.dpz]).map(|v| v * v).sum::<f64>().sqrt();
    let d = norm(&jf) * norm(&jg);
    Ok(if d == 0.0 { 0.0 } else { m.abs() / d })
}

/// Gradient rows (scaled by `e^{−log_scale}` and normalised to unit length)
/// for rank computations.
pub fn gradient_matrix(fs: &[&dyn PhaseFunction], s: &PhaseState, curve: &MetricCurve) -> Result<DMatrix<f64>> {
    let n = s.n();
    let d = 2 * n + 2;
    let mut m = DMatrix::zeros(fs.len(), d);
    for (r, f) in fs.iter().enumerate() {
        let j = f.jet(s, curve)?;
        let row: Vec<f64> = j.dx.iter().chain([&j.dz]).chain(&j.dp).chain([&j.dpz]).copied().collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let c = if norm > 0.0 { norm.recip() } else { 0.0 };
        for (k, v) in row.iter().enumerate() {
            m[(r, k)] = v * c;
        }
    }
    Ok(m)
}
