mod common;

use common::{sl_matrix, sup_norm};
use mapping_torus::matrix_lab::{assemble_form, dual_action, entropy_lower_bound, spectrum, SpectrumKind};
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn dual_bound_differs_for_asymmetric_spectrum() {
    let a = common::mat(&[&[1, -1, -1], &[0, 1, 1], &[-1, 0, 1]]);
    let h = entropy_lower_bound(&a);
    let hd = entropy_lower_bound(&dual_action(&a));
    assert!(h > 0.0 && hd > 0.0);
    assert!((h - hd).abs() > 1e-3, "{h} vs {hd}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dual_action_is_inverse_transpose(a in (2usize..=4).prop_flat_map(|n| sl_matrix(n, 8))) {
        let d = dual_action(&a);
        prop_assert!(a.mul(&d.transpose()).is_identity());
    }

    #[test]
    fn eigenvalue_product_is_one(a in (2usize..=4).prop_flat_map(|n| sl_matrix(n, 6))) {
        let prod = a.eigenvalues().iter().fold(num_complex::Complex64::new(1.0, 0.0), |acc, r| {
            acc * r.value.powu(r.multiplicity as u32)
        });
        prop_assert!((prod - 1.0).norm() < 1e-10, "product {prod}");
    }

    #[test]
    fn jordan_basis_conjugates_dual_action(a in (2usize..=3).prop_flat_map(|n| sl_matrix(n, 6))) {
        let Ok(s) = spectrum(&a) else { return Ok(()) };
        let n = s.n();
        prop_assert!(sup_norm(&(&s.basis * &s.basis_inverse - DMatrix::identity(n, n))) < 1e-10);
        prop_assert_eq!(s.jordan_blocks.iter().map(|b| b.size).sum::<usize>(), n);
        if s.kind == SpectrumKind::AllReal {
            let j = assemble_form(&s.real_blocks());
            let conj = &s.basis_inverse * dual_action(&a).to_f64() * &s.basis;
            let scale = sup_norm(&j).max(1.0);
            prop_assert!(sup_norm(&(conj - &j)) < 1e-9 * scale, "{a}");
        }
    }

    // Sp Ã = 1/Sp A, so the two bounds agree whenever the spectrum is closed
    // under inversion, which det = 1 forces only for n = 2.
    #[test]
    fn entropy_bound_matches_dual_in_the_plane(a in sl_matrix(2, 10)) {
        prop_assert!((entropy_lower_bound(&a) - entropy_lower_bound(&dual_action(&a))).abs() < 1e-12);
    }

    #[test]
    fn entropy_bound_of_dual_uses_smallest_modulus(a in (3usize..=4).prop_flat_map(|n| sl_matrix(n, 8))) {
        let min = a.eigenvalues().iter().map(|r| r.value.norm()).fold(f64::INFINITY, f64::min);
        let expected = (-min.ln()).max(0.0);
        prop_assert!((entropy_lower_bound(&dual_action(&a)) - expected).abs() < 1e-10);
        prop_assert!(entropy_lower_bound(&a) >= 0.0);
    }

    #[test]
    fn rotation_spectra_lie_on_unit_circle(a in sl_matrix(2, 6)) {
        if let Ok(s) = spectrum(&a) {
            if s.kind == SpectrumKind::ComplexUnitCircle {
                for z in &s.eigenvalues {
                    prop_assert!((z.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
