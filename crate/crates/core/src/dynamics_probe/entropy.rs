//! Entropy bound against the measured top exponent on `V⁺`.

use serde::{Deserialize, Serialize};

use super::lyapunov::LyapunovReport;
use crate::matrix_lab::{entropy_lower_bound, MonodromyMatrix};
use crate::Result;

/// Relative gap below which bound and measurement are reported consistent.
pub const ENTROPY_GAP: f64 = 0.05;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyReport {
    /// `log max |λ|` over the spectrum of `A`.
    pub lower_bound: f64,
    pub measured_top: Option<f64>,
    /// `|measured − bound| / bound`, or the absolute gap when the bound is 0.
    pub gap: Option<f64>,
    pub hyperbolic: bool,
    pub consistent: Option<bool>,
    pub gap_tolerance: f64,
}

pub fn entropy_report(a: &MonodromyMatrix, lyapunov: Option<&LyapunovReport>) -> Result<EntropyReport> {
    let lower_bound = entropy_lower_bound(a);
    let hyperbolic = lower_bound > 1e-12;
    let measured_top = lyapunov.map(|l| l.top());
    let gap = measured_top.map(|m| if hyperbolic { (m - lower_bound).abs() / lower_bound } else { (m - lower_bound).abs() });
    Ok(EntropyReport {
        lower_bound,
        measured_top,
        gap,
        hyperbolic,
        consistent: gap.map(|g| g < ENTROPY_GAP),
        gap_tolerance: ENTROPY_GAP,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_lab::validate_monodromy;

    #[test]
    fn bounds() {
        let cat = validate_monodromy(&[vec![2, 1], vec![1, 1]]).unwrap();
        let r = entropy_report(&cat, None).unwrap();
        assert!((r.lower_bound - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
        assert!(r.hyperbolic);
        for m in [vec![vec![1, 0], vec![0, 1]], vec![vec![1, 1], vec![0, 1]]] {
            let r = entropy_report(&validate_monodromy(&m).unwrap(), None).unwrap();
            assert_eq!(r.lower_bound, 0.0);
            assert!(!r.hyperbolic);
        }
    }
}
