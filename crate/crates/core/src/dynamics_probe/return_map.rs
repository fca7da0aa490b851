//! The fiber return map of the vertical flow `p = 0, p_z = 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curve_factory::MetricCurve;
use crate::geodesic_engine::{integrate, reduce_mod_deck, PhaseState};
use crate::Result;

/// Offset used to read the linear part of the map.
const PROBE: f64 = 1e-2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReturnMapReport {
    /// Entrywise estimate of the linear part, in lattice coordinates.
    pub estimate: Vec<Vec<f64>>,
    /// Nearest integer matrix.
    pub matrix: Vec<Vec<i64>>,
    /// Torus distance between the images and `matrix · X mod 1`, maximised
    /// over the grid.
    pub max_deviation: f64,
    pub determinant: f64,
    /// `(X, image)` pairs, lattice coordinates in `[0,1)ⁿ`.
    pub images: Vec<(Vec<f64>, Vec<f64>)>,
}

fn torus_delta(a: f64) -> f64 {
    a - a.round()
}

/// Image of a lattice fiber point after unit time on the vertical flow.
pub fn return_point(curve: &MetricCurve, x_lattice: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = curve.n();
    let x = curve.frame_inverse() * DVector::from_column_slice(x_lattice);
    let s = PhaseState::new(x.as_slice().to_vec(), 0.0, vec![0.0; n], 1.0)?;
    let mut end = integrate(&s, curve, 1.0, tol)?.end;
    // The vertical flow lands on z = 1 up to rounding; snap before reducing.
    if (end.z - 1.0).abs() < 1e-9 {
        end.z = 1.0;
    }
    let r = reduce_mod_deck(&end, curve);
    let xl = curve.frame() * DVector::from_vec(r.x);
    Ok(xl.iter().map(|v| v - v.floor()).collect())
}

pub fn fiber_return_map(curve: &MetricCurve, grid: &[Vec<f64>], tol: f64) -> Result<ReturnMapReport> {
    let n = curve.n();
    let origin = return_point(curve, &vec![0.0; n], tol)?;
    let mut est = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = PROBE;
        let img = return_point(curve, &e, tol)?;
        for i in 0..n {
            est[(i, j)] = torus_delta(img[i] - origin[i]) / PROBE;
        }
    }
    let matrix: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| est[(i, j)].round() as i64).collect()).collect();
    let mut max_deviation: f64 = 0.0;
    let mut images = Vec::with_capacity(grid.len());
    for x in grid {
        let img = return_point(curve, x, tol)?;
        for i in 0..n {
            let pred: f64 = (0..n).map(|j| matrix[i][j] as f64 * x[j]).sum();
            max_deviation = max_deviation.max(torus_delta(img[i] - pred).abs());
        }
        images.push((x.clone(), img));
    }
    let determinant = est.determinant();
    let estimate = (0..n).map(|i| (0..n).map(|j| est[(i, j)]).collect()).collect();
    Ok(ReturnMapReport { estimate, matrix, max_deviation, determinant, images })
}
