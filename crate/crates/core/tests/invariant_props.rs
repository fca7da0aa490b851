mod common;

use common::{mat, sl_matrix};
use mapping_torus::invariant_forge::{
    build_q, defining_relation_defect, shifted_jk, smooth_family, solve_gk, solve_gk_formal, rotation_invariants,
    verify_q_invariance, RatPoly,
};
use mapping_torus::invariant_forge::lemma::first_lambda_dependent;
use mapping_torus::matrix_lab::{dual_action, spectrum, MonodromyMatrix, SpectrumKind};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[test]
fn gk_defining_relation_and_structure() {
    for k in 1..=6 {
        let formal = solve_gk_formal(k, k + 1).unwrap();
        if let Some((m, c)) = first_lambda_dependent(&formal) {
            panic!("G_{k}: coefficient of {m:?} depends on λ: {c}");
        }
        let g = solve_gk(k, k + 1).unwrap();
        assert!(defining_relation_defect(&g, k).unwrap().is_empty(), "G_{k}");
        assert!(shifted_jk(&g, k).verify_shift().unwrap(), "J_{k}");
        assert!(g.support().iter().all(|&i| i <= k));
        assert_eq!(g.degree_in(k), 1, "G_{k} must be linear in p_(k+1)");
        assert!(g.is_homogeneous() && g.total_degree() == Some(k as u32));
    }
}

#[test]
fn gk_ignores_extra_chain_variables() {
    for k in 1..=4 {
        let short = solve_gk(k, k + 1).unwrap();
        let long = solve_gk(k, k + 3).unwrap();
        assert_eq!(long.degree_in(k + 1), 0);
        assert_eq!(long.degree_in(k + 2), 0);
        for (m, c) in short.terms() {
            assert_eq!(&long.coeff(m), c);
        }
        assert_eq!(short.len(), long.len());
    }
}

fn unit_sphere(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

/// `I(Ã p) = I(p)` for every family member at `points` random momenta.
fn family_invariant_at(a: &MonodromyMatrix, points: usize, seed: u64) {
    let spec = spectrum(a).unwrap();
    let fam = smooth_family(&spec).unwrap();
    let dual = dual_action(a).to_f64();
    let worst = (0..points)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let p = unit_sphere(&mut rng, a.n());
            let ap = (&dual * DVector::from_column_slice(&p)).as_slice().to_vec();
            fam.iter()
                .map(|f| {
                    let (x, y) = (f.evaluate(&p), f.evaluate(&ap));
                    if x.singular.is_some() || y.singular.is_some() {
                        return 0.0;
                    }
                    (x.jet.materialize() - y.jet.materialize()).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    assert!(worst < 1e-10, "{a}: worst defect {worst:e}");
}

#[test]
fn smooth_family_is_invariant_sol() {
    family_invariant_at(&mat(&[&[2, 1], &[1, 1]]), 1_000_000, 1);
}

#[test]
fn smooth_family_is_invariant_jordan_and_mixed_blocks() {
    family_invariant_at(&mat(&[&[1, 1], &[0, 1]]), 200_000, 2);
    family_invariant_at(&mat(&[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]]), 200_000, 3);
    family_invariant_at(&mat(&[&[2, 1, 0], &[1, 1, 0], &[0, 0, 1]]), 200_000, 4);
}

fn family_rank_fraction(a: &MonodromyMatrix, samples: usize, seed: u64) -> f64 {
    let spec = spectrum(a).unwrap();
    let q = build_q(&spec).unwrap();
    let fam = smooth_family(&spec).unwrap();
    let n = a.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut drawn, mut full) = (0, 0);
    while drawn < samples {
        let p = unit_sphere(&mut rng, n);
        let y = (&spec.basis_inverse * DVector::from_column_slice(&p)).as_slice().to_vec();
        if q.eval_f64(&y).abs() < 1e-3 {
            continue;
        }
        drawn += 1;
        let mut jac = DMatrix::zeros(fam.len(), n);
        for (r, f) in fam.iter().enumerate() {
            let g = f.evaluate(&p).jet.grad;
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for c in 0..n {
                    jac[(r, c)] = g[c] / norm;
                }
            }
        }
        let sv = jac.singular_values();
        let top = sv.max();
        if top > 0.0 && sv.iter().filter(|&&s| s > 1e-8 * top).count() == n - 1 {
            full += 1;
        }
    }
    full as f64 / samples as f64
}

#[test]
fn smooth_family_is_independent() {
    for a in [mat(&[&[2, 1], &[1, 1]]), mat(&[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]]), mat(&[&[2, 1, 0], &[1, 1, 0], &[0, 0, 1]])] {
        let f = family_rank_fraction(&a, 2000, 9);
        assert!(f >= 0.99, "{a}: rank n−1 at {:.2}% of samples", 100.0 * f);
    }
}

fn rat(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// `I ∘ Ã` by exact substitution `p_i ↦ Σ_j Ã_ij p_j`.
fn pull_back(f: &RatPoly, m: &MonodromyMatrix) -> RatPoly {
    let vars = f.vars().clone();
    let images: Vec<RatPoly> = (0..m.n())
        .map(|i| {
            let mut img = RatPoly::zero_in(vars.clone());
            for j in 0..m.n() {
                img = img + RatPoly::var(vars.clone(), j).unwrap().scale(&rat(m.get(i, j)));
            }
            img
        })
        .collect();
    f.substitute(&images)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_is_invariant_for_random_real_spectra(a in (2usize..=3).prop_flat_map(|n| sl_matrix(n, 6))) {
        let Ok(spec) = spectrum(&a) else { return Ok(()) };
        if spec.kind != SpectrumKind::AllReal {
            return Ok(());
        }
        let v = verify_q_invariance(&a, &spec).unwrap();
        prop_assert!(v.holds(), "{a}: {v:?}");
    }

    #[test]
    fn rotation_invariants_survive_conjugation(base in 0usize..3, b in sl_matrix(2, 5)) {
        let r = [mat(&[&[-1, -1], &[1, 0]]), mat(&[&[0, -1], &[1, 0]]), mat(&[&[0, -1], &[1, 1]])][base].clone();
        let a = b.mul(&r).mul(&b.inverse());
        let inv = rotation_invariants(&a).unwrap();
        prop_assert_eq!(inv.k, [3, 4, 6][base]);
        prop_assert!(inv.exact);
        let d = dual_action(&a);
        prop_assert_eq!(&pull_back(&inv.i1, &d), &inv.i1);
        prop_assert_eq!(&pull_back(&inv.i2, &d), &inv.i2);
    }
}
