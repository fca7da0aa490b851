//! Accessors for the SOL model `G(z) = diag(λ^{2z}, λ^{−2z})` in its
//! eigenframe, with coordinates `(u, v)`.

use crate::curve_factory::MetricCurve;
use crate::geodesic_engine::{Energy, LocalIntegral, PhaseFunction};
use crate::invariant_forge::{q_integral, smooth_family};
use crate::matrix_lab::spectrum;
use crate::{Error, Result};

/// Indices of `u` and `v` among the local coordinates and `log λ > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolAxes {
    pub u: usize,
    pub v: usize,
    pub log_lambda: f64,
}

impl SolAxes {
    /// Requires a 2-dimensional curve with diagonal `G(z)` and `G(0) = E`.
    pub fn of(curve: &MetricCurve) -> Result<Self> {
        if curve.n() != 2 {
            return Err(Error::InvalidInput(format!("SOL probes need n = 2, got {}", curve.n())));
        }
        let g0 = curve.metric_at(0.0).g;
        let g1 = curve.metric_at(1.0).g;
        let off = g1[(0, 1)].abs().max(g0[(0, 1)].abs());
        let unit = (g0[(0, 0)] - 1.0).abs().max((g0[(1, 1)] - 1.0).abs());
        if off > 1e-9 * g1.amax() || unit > 1e-9 {
            return Err(Error::InvalidInput("curve is not in SOL eigenframe form".into()));
        }
        let (u, v) = if g1[(0, 0)] > g1[(1, 1)] { (0, 1) } else { (1, 0) };
        let log_lambda = 0.5 * g1[(u, u)].ln();
        if log_lambda <= 0.0 {
            return Err(Error::InvalidInput("SOL model needs a hyperbolic monodromy".into()));
        }
        Ok(SolAxes { u, v, log_lambda })
    }

    pub fn pu(&self, p: &[f64]) -> f64 {
        p[self.u]
    }

    pub fn pv(&self, p: &[f64]) -> f64 {
        p[self.v]
    }
}

/// `{p_u p_v, I₂, H}` as phase functions on local coordinates.
pub fn sol_triple(curve: &MetricCurve) -> Result<Vec<Box<dyn PhaseFunction + Send + Sync>>> {
    let spec = spectrum(curve.a())?;
    let q = LocalIntegral::from_lattice(&q_integral(&spec)?, curve);
    let family = smooth_family(&spec)?;
    let first = family.first().ok_or_else(|| Error::InvalidInput("empty smooth family".into()))?;
    let mut i2 = LocalIntegral::from_lattice(first, curve);
    i2.0.label = "I2".into();
    Ok(vec![Box::new(q), Box::new(i2), Box::new(Energy)])
}
