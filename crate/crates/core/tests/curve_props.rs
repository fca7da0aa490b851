mod common;

use common::{mat, sl_matrix, sup_norm};
use mapping_torus::curve_factory::{expm, MetricCurve};
use mapping_torus::matrix_lab::MonodromyMatrix;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn examples() -> Vec<MonodromyMatrix> {
    vec![
        mat(&[&[2, 1], &[1, 1]]),
        mat(&[&[1, 1], &[0, 1]]),
        mat(&[&[0, -1], &[1, 0]]),
        mat(&[&[-2, -1], &[-1, -1]]),
        mat(&[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]]),
        mat(&[&[2, 1, 0], &[1, 1, 0], &[0, 0, 1]]),
    ]
}

#[test]
fn generators_reproduce_monodromy() {
    for a in examples() {
        let c = MetricCurve::new(&a, None).unwrap();
        let prod = expm(c.g1()) * expm(c.g2());
        assert!(sup_norm(&(prod - a.to_f64())) < 1e-9, "{a}");
        assert!(c.g1().trace().abs() < 1e-10 && c.g2().trace().abs() < 1e-10);
        for z in [-1.3, 0.25, 0.7, 2.1] {
            let a2 = expm(c.g2());
            let ez = expm(&(c.g1() * z));
            assert!(sup_norm(&(&a2 * &ez - &ez * &a2)) < 1e-9, "{a} at z = {z}");
        }
    }
}

/// Truncated Taylor series of `γ` about `z0` via `γ(z) = e^{-hG2}e^{-hG1}γ(z0)`-free
/// expansion: derivatives of `e^{-zG2}e^{-zG1}` are `Σ C(k,j) (-G2)^j (-G1)^{k-j}`.
fn taylor(c: &MetricCurve, z0: f64, h: f64, terms: usize) -> DMatrix<f64> {
    let n = c.n();
    let (a, b) = (-c.g2(), -c.g1());
    let ea = expm(&(&a * z0));
    let eb = expm(&(&b * z0));
    let mut out = DMatrix::zeros(n, n);
    let mut fact = 1.0;
    for k in 0..terms {
        if k > 0 {
            fact *= k as f64;
        }
        let mut dk = DMatrix::zeros(n, n);
        let mut binom = 1.0;
        for j in 0..=k {
            dk += &ea * a.pow(j as u32) * b.pow((k - j) as u32) * &eb * binom;
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        out += dk * (h.powi(k as i32) / fact);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn twist_positivity_volume(idx in 0usize..6, z in -3.0f64..3.0) {
        let a = &examples()[idx];
        let c = MetricCurve::new(a, None).unwrap();
        let ainv = a.inverse().to_f64();
        prop_assert!(sup_norm(&(c.gamma(z + 1.0) - c.gamma(z) * ainv)) < 1e-10 * sup_norm(&c.gamma(z)).max(1.0));
        prop_assert!(nalgebra::Cholesky::new(c.metric_at(z).g).is_some());
        prop_assert!((c.gamma(z).determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn curve_is_analytic(idx in 0usize..6, z0 in -2.0f64..2.0, h in -0.1f64..0.1) {
        let c = MetricCurve::new(&examples()[idx], None).unwrap();
        let t = taylor(&c, z0, h, 10);
        prop_assert!(sup_norm(&(t - c.gamma(z0 + h))) < 1e-8);
    }

    #[test]
    fn random_hyperbolic_curves_twist(a in sl_matrix(2, 6), z in -2.0f64..2.0) {
        let Ok(c) = MetricCurve::new(&a, None) else { return Ok(()) };
        let ainv = a.inverse().to_f64();
        let g = c.gamma(z);
        prop_assert!(sup_norm(&(c.gamma(z + 1.0) - &g * ainv)) < 1e-9 * sup_norm(&g).max(1.0) * sup_norm(&a.to_f64()));
    }
}
