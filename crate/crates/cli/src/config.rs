//! Run configuration: one JSON file plus flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mapping_torus::geodesic_engine::TOL_RANGE;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Initial condition in the local frame of the curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub x: Vec<f64>,
    pub z: f64,
    pub p: Vec<f64>,
    pub pz: f64,
}

/// Limits checked under `verify`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Largest accepted `|{f, g}|`.
    pub involution: f64,
    /// Largest accepted drift of the non-energy integrals.
    pub integral_drift: f64,
    /// Largest accepted `|Σ exponents|`.
    pub lyapunov_sum: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { involution: 1e-8, integral_drift: 1e-6, lyapunov_sum: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub matrix: Vec<Vec<i64>>,
    /// Ĝ in lattice coordinates; identity when absent.
    pub ghat: Option<Vec<Vec<f64>>>,
    /// Integrator tolerance.
    pub tol: f64,
    /// Time horizon for integrate / lyapunov / asymptotics.
    pub horizon: f64,
    /// Sample count for sampling commands.
    pub samples: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub initial: Option<InitialState>,
    /// Fail with exit code 5 when a checked threshold is violated.
    pub verify: bool,
    pub thresholds: Thresholds,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            matrix: vec![vec![2, 1], vec![1, 1]],
            ghat: None,
            tol: 1e-10,
            horizon: 200.0,
            samples: 100,
            seed: 0,
            out: PathBuf::from("out"),
            initial: None,
            verify: false,
            thresholds: Thresholds::default(),
        }
    }
}

/// Flag values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub matrix: Option<Vec<Vec<i64>>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub horizon: Option<f64>,
    pub samples: Option<usize>,
    pub verify: bool,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, o: &Overrides) -> Result<Self> {
        let mut c = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(m) = &o.matrix {
            c.matrix = m.clone();
        }
        if let Some(s) = o.seed {
            c.seed = s;
        }
        if let Some(p) = &o.out {
            c.out = p.clone();
        }
        if let Some(t) = o.tol {
            c.tol = t;
        }
        if let Some(h) = o.horizon {
            c.horizon = h;
        }
        if let Some(n) = o.samples {
            c.samples = n;
        }
        c.verify |= o.verify;
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&self.tol) {
            bail!(mapping_torus::Error::ToleranceOutOfRange(self.tol));
        }
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            bail!(mapping_torus::Error::InvalidInput(format!("horizon must be positive, got {}", self.horizon)));
        }
        Ok(())
    }

    /// JSON encoding without the output path, so artifacts do not depend on
    /// where they were written.
    pub fn portable(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Some(m) = v.as_object_mut() {
            m.remove("out");
        }
        v
    }

    /// SHA-256 of [`RunConfig::portable`].
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.portable()).expect("value serialises");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// `"2,1;1,1"` → `[[2,1],[1,1]]`.
pub fn parse_matrix(s: &str) -> Result<Vec<Vec<i64>>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<i64>().with_context(|| format!("bad matrix entry {x:?}")))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}
