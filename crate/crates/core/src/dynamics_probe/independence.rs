//! Functional independence by numerical Jacobian rank.

use nalgebra::SVD;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve_factory::MetricCurve;
use crate::geodesic_engine::{gradient_matrix, random_unit_state, PhaseFunction};
use crate::{Error, Result};

/// Relative singular-value threshold.
pub const RANK_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankStats {
    pub expected_rank: usize,
    /// Points drawn, including singular ones.
    pub drawn: usize,
    /// Points skipped because an integral was singular there.
    pub singular: usize,
    /// Nonsingular points attaining the expected rank.
    pub full_rank: usize,
    /// `full_rank / (drawn − singular)`.
    pub fraction: f64,
    /// `histogram[r]` counts nonsingular points of rank `r`.
    pub histogram: Vec<usize>,
    pub threshold: f64,
    pub seed: u64,
}

pub fn jacobian_rank(m: &nalgebra::DMatrix<f64>) -> usize {
    let sv = SVD::new(m.clone(), false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * top).count()
}

/// Rank statistics at `samples` uniform unit-bundle points; point `i` uses
/// the RNG stream `(seed, i)` so results do not depend on thread count.
pub fn independence_rank(
    integrals: &[&(dyn PhaseFunction + Sync)],
    curve: &MetricCurve,
    samples: usize,
    seed: u64,
) -> Result<RankStats> {
    if integrals.len() < 2 {
        return Err(Error::InvalidInput("independence needs at least two integrals".into()));
    }
    let k = integrals.len();
    let ranks: Vec<Option<usize>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let s = random_unit_state(curve, &mut rng);
            let fs: Vec<&dyn PhaseFunction> = integrals.iter().map(|f| *f as &dyn PhaseFunction).collect();
            match gradient_matrix(&fs, &s, curve) {
                Ok(m) => Ok(Some(jacobian_rank(&m))),
                Err(Error::SingularPoint { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut histogram = vec![0; k + 1];
    let mut singular = 0;
    for r in &ranks {
        match r {
            Some(r) => histogram[*r] += 1,
            None => singular += 1,
        }
    }
    let good = samples - singular;
    let full_rank = histogram[k];
    let fraction = if good == 0 { 0.0 } else { full_rank as f64 / good as f64 };
    Ok(RankStats { expected_rank: k, drawn: samples, singular, full_rank, fraction, histogram, threshold: RANK_THRESHOLD, seed })
}
