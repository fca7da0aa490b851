#![allow(dead_code)]

use mapping_torus::matrix_lab::{validate_monodromy, MonodromyMatrix};
use proptest::prelude::*;

/// Products of elementary transvections `E + c·e_ij`, which lie in SL(n, Z).
pub fn sl_matrix(n: usize, max_factors: usize) -> impl Strategy<Value = MonodromyMatrix> {
    prop::collection::vec((0..n, 0..n, -2i64..=2), 1..=max_factors).prop_map(move |ops| {
        let mut m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        for (i, j, c) in ops {
            if i == j {
                continue;
            }
            // Row operation r_i += c·r_j.
            let rj = m[j].clone();
            for (x, y) in m[i].iter_mut().zip(rj) {
                *x += c * y;
            }
        }
        validate_monodromy(&m).expect("transvection products are unimodular")
    })
}

pub fn mat(rows: &[&[i64]]) -> MonodromyMatrix {
    validate_monodromy(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

pub fn sup_norm(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, b| a.max(b.abs()))
}
