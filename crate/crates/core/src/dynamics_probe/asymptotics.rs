//! Convergence of `N^u` and `N^v` orbits to `V^±`.
//!
//! Distance between trajectories on the non-compact cover is not used;
//! convergence is read off `p_z → ±1` and the decay of the conformal
//! tangential speed `e^{∓z log λ}|p|`.

use serde::{Deserialize, Serialize};

use super::classify::{classify_state, OrbitTag};
use super::sol::SolAxes;
use crate::curve_factory::MetricCurve;
use crate::geodesic_engine::{integrate, PhaseState, Trajectory};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirectionReport {
    /// Signed integration time.
    pub time: f64,
    pub pz_final: f64,
    /// `±1`, the value `p_z` should approach.
    pub pz_target: f64,
    pub pz_error: f64,
    /// Conformal tangential speed at the start and the end.
    pub speed_initial: f64,
    pub speed_final: f64,
    /// Earliest sample time after which `p_z` moves monotonically toward its
    /// target (absolute time, `None` if never).
    pub monotone_since: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub tag: OrbitTag,
    pub forward: DirectionReport,
    pub backward: DirectionReport,
}

impl AsymptoticReport {
    pub fn converged(&self, tol: f64) -> bool {
        self.forward.pz_error < tol && self.backward.pz_error < tol
    }
}

type Speed = Box<dyn Fn(&PhaseState) -> f64>;

pub fn asymptotic_check(s0: &PhaseState, curve: &MetricCurve, horizon: f64, tol: f64) -> Result<AsymptoticReport> {
    let axes = SolAxes::of(curve)?;
    let class = classify_state(s0, curve)?;
    let (sign, speed): (f64, Speed) = match class.tag {
        OrbitTag::Nu => (1.0, Box::new(move |s: &PhaseState| (-s.z * axes.log_lambda).exp() * axes.pu(&s.p).abs())),
        OrbitTag::Nv => (-1.0, Box::new(move |s: &PhaseState| (s.z * axes.log_lambda).exp() * axes.pv(&s.p).abs())),
        OrbitTag::Vplus | OrbitTag::Vminus => (s0.pz.signum(), Box::new(|_: &PhaseState| 0.0)),
        _ => return Err(Error::NotOnInvariantSubmanifold),
    };
    let run = |t: f64, target: f64| -> Result<DirectionReport> {
        let tr = integrate(s0, curve, t, tol)?;
        Ok(direction(&tr, t, target, &*speed))
    };
    // Forward N^u: p_z → +1; backward: p_z → −1. Mirrored on N^v.
    let (fwd, bwd) = match class.tag {
        OrbitTag::Vplus | OrbitTag::Vminus => (sign, sign),
        _ => (sign, -sign),
    };
    Ok(AsymptoticReport { tag: class.tag, forward: run(horizon, fwd)?, backward: run(-horizon, bwd)? })
}

fn direction(tr: &Trajectory, time: f64, target: f64, speed: &dyn Fn(&PhaseState) -> f64) -> DirectionReport {
    let ordered: Vec<&PhaseState> =
        if time >= 0.0 { tr.samples.iter().collect() } else { tr.samples.iter().rev().collect() };
    let mut monotone_since = None;
    for w in ordered.windows(2).rev() {
        let (a, b) = (w[0], w[1]);
        if (b.pz - a.pz) * target < -1e-14 {
            break;
        }
        monotone_since = Some(a.t);
    }
    DirectionReport {
        time,
        pz_final: tr.end.pz,
        pz_target: target,
        pz_error: (tr.end.pz - target).abs(),
        speed_initial: speed(ordered[0]),
        speed_final: speed(&tr.end),
        monotone_since,
    }
}
