//! Orbit types of the SOL geodesic flow on the unit bundle.

use serde::{Deserialize, Serialize};

use super::sol::SolAxes;
use crate::curve_factory::MetricCurve;
use crate::geodesic_engine::{PhaseState, UNIT_BUNDLE_TOL};
use crate::{Error, Result};

/// Absolute threshold for the equalities in the predicates.
pub const CLASSIFY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrbitTag {
    InvariantTorus,
    FlatFiberOrbit,
    Nu,
    Nv,
    Vplus,
    Vminus,
}

impl std::fmt::Display for OrbitTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// The quantities the predicates were evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub pu: f64,
    pub pv: f64,
    pub pz: f64,
    pub pu_pv: f64,
    /// `e^{−2z log λ} p_u² − e^{2z log λ} p_v²`, proportional to `ṗ_z`.
    pub speed_gap: f64,
    pub unit_defect: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitClass {
    pub tag: OrbitTag,
    pub witness: Witness,
}

pub fn classify_state(s: &PhaseState, curve: &MetricCurve) -> Result<OrbitClass> {
    let axes = SolAxes::of(curve)?;
    let defect = s.unit_defect(curve);
    if defect >= UNIT_BUNDLE_TOL {
        return Err(Error::NotUnitBundle { defect });
    }
    let (pu, pv) = (axes.pu(&s.p), axes.pv(&s.p));
    let e = (2.0 * s.z * axes.log_lambda).exp();
    let witness = Witness { pu, pv, pz: s.pz, pu_pv: pu * pv, speed_gap: pu * pu / e - e * pv * pv, unit_defect: defect };
    let (u0, v0) = (pu.abs() < CLASSIFY_EPS, pv.abs() < CLASSIFY_EPS);
    let tag = match (u0, v0) {
        (true, true) if s.pz > 0.0 => OrbitTag::Vplus,
        (true, true) => OrbitTag::Vminus,
        (false, true) => OrbitTag::Nu,
        (true, false) => OrbitTag::Nv,
        (false, false) if s.pz.abs() < CLASSIFY_EPS && witness.speed_gap.abs() < CLASSIFY_EPS => OrbitTag::FlatFiberOrbit,
        (false, false) => OrbitTag::InvariantTorus,
    };
    Ok(OrbitClass { tag, witness })
}

/// Unit-bundle state with the given `(p_u, p_v)` at height `z`, `p_z ≥ 0`
/// solving `H = 1/2`; `None` if the tangential momenta already exceed it.
pub fn sol_state(curve: &MetricCurve, x: [f64; 2], z: f64, pu: f64, pv: f64) -> Result<Option<PhaseState>> {
    let axes = SolAxes::of(curve)?;
    let e = (2.0 * z * axes.log_lambda).exp();
    let mut rest = 1.0 - pu * pu / e - e * pv * pv;
    if rest < 0.0 {
        // Rounding on the balanced layer p_z = 0.
        if rest > -1e-14 {
            rest = 0.0;
        } else {
            return Ok(None);
        }
    }
    let mut p = vec![0.0; 2];
    p[axes.u] = pu;
    p[axes.v] = pv;
    Ok(Some(PhaseState::new(x.to_vec(), z, p, rest.sqrt())?))
}
